mod common;

use common::*;
use homs_core::cell::CellBoundary;
use homs_core::homog::TemperatureTable;
use homs_core::macroscale::Snapshot;
use homs_core::materials::MaterialLaw;
use homs_core::mesh::{build_rectangle_mesh, Mesh};
use homs_core::reconstruct::{recover_gradient, recover_hessian, time_derivatives, Evaluator, FieldKind};

const DT: f64 = 1e-3;

fn field(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    mesh.nodes().iter().map(|p| f(p[0], p[1])).collect()
}

fn vector(mesh: &Mesh, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    mesh.nodes().iter().flat_map(|p| f(p[0], p[1])).collect()
}

/// Smooth macro state with nonzero rates and gradients in every field.
fn state(mesh: &Mesh) -> Snapshot {
    let t = |x: f64, y: f64| 300.0 + 80.0 * x * (1.0 - x) + 40.0 * y * (1.0 - y) * x;
    let u = |x: f64, y: f64| [1e-3 * x * (1.0 - x) * y, 2e-3 * y * (1.0 - y)];
    Snapshot {
        step: 5,
        time: 5.0 * DT,
        temperature: field(mesh, t),
        temperature_prev: field(mesh, |x, y| t(x, y) - DT * 10.0 * x * (1.0 - x)),
        potential: field(mesh, |x, y| 0.1 * x * (1.0 - x) * (1.0 + y)),
        displacement: vector(mesh, u),
        displacement_prev: vector(mesh, |x, y| u(x, y).map(|v| 0.9 * v)),
        displacement_prev2: vector(mesh, |x, y| u(x, y).map(|v| 0.7 * v)),
    }
}

fn composite_table(boundary: CellBoundary) -> TemperatureTable {
    table(&disk_cell(0.2, boundary), &MaterialLaw::example_composite(), 5, true)
}

#[test]
fn linear_gradient_is_recovered_exactly() {
    let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 5, 7).unwrap();
    let f = field(&mesh, |x, y| 3.0 * x - 2.0 * y + 1.0);
    for g in recover_gradient(&mesh, &f) {
        assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12);
    }
    let q = field(&mesh, |x, y| x * x + x * y);
    for h in recover_hessian(&mesh, &q).iter().take(3) {
        assert!(h.get(0, 1) == h.get(1, 0));
    }
}

#[test]
fn quadratic_gradient_error_shrinks_with_the_mesh() {
    let mut errors = Vec::new();
    for n in [8, 16, 32] {
        // interior nodes shifted so element patches are not symmetric
        let base = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n).unwrap();
        let h = 1.0 / n as f64;
        let nodes = base
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if base.is_boundary(i) {
                    *p
                } else {
                    [p[0] + 0.2 * h * (7.0 * p[1]).sin(), p[1] + 0.2 * h * (5.0 * p[0]).cos()]
                }
            })
            .collect();
        let mesh = Mesh::new(nodes, base.triangles().to_vec(), base.phases().to_vec()).unwrap();
        let g = recover_gradient(&mesh, &field(&mesh, |x, _| x * x));
        let worst = mesh
            .nodes()
            .iter()
            .zip(&g)
            .enumerate()
            .filter(|(i, _)| !mesh.is_boundary(*i))
            .map(|(_, (p, g))| (g[0] - 2.0 * p[0]).abs())
            .fold(0.0, f64::max);
        errors.push(worst);
    }
    assert!(errors[1] < 0.6 * errors[0] && errors[2] < 0.6 * errors[1], "{errors:?}");
}

#[test]
fn backward_differences_are_exact_for_polynomials_in_time() {
    let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
    let mut s = state(&mesh);
    s.temperature_prev = s.temperature.clone();
    let u = |t: f64| vector(&mesh, |x, y| [1.0 + 2.0 * t * x, 3.0 * t * t + y]);
    let t = 0.2;
    s.displacement = u(t);
    s.displacement_prev = u(t - DT);
    s.displacement_prev2 = u(t - 2.0 * DT);
    let d = time_derivatives(&mesh, &s, DT);
    assert!(d.temperature_rate.iter().all(|v| *v == 0.0));
    for n in 0..mesh.node_count() {
        assert!(d.acceleration[2 * n].abs() < 1e-6);
        assert!((d.acceleration[2 * n + 1] - 6.0).abs() < 1e-6);
        assert!((d.velocity_gradient[n].get(0, 0) - 2.0).abs() < 1e-9);
    }
}

#[test]
fn second_order_terms_account_for_the_difference() {
    let table = composite_table(CellBoundary::Periodic);
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
    let points = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 20, 20).unwrap();
    let eval = Evaluator::new(&table, &macro_mesh, points.nodes(), 0.25).unwrap();
    let rec = eval.evaluate(&state(&macro_mesh), DT, true);
    assert_eq!(rec.terms.len(), 16);
    let pairs = [
        (FieldKind::Temperature, &rec.first_order.temperature, &rec.second_order.temperature),
        (FieldKind::Potential, &rec.first_order.potential, &rec.second_order.potential),
        (FieldKind::Displacement, &rec.first_order.displacement, &rec.second_order.displacement),
    ];
    for (kind, first, second) in pairs {
        for i in 0..first.len() {
            let sum: f64 = rec.terms.iter().filter(|t| t.field == kind).map(|t| t.values[i]).sum();
            assert!((second[i] - first[i] - sum).abs() <= 1e-12 * (1.0 + first[i].abs()), "{kind:?} {i}");
        }
    }
    assert!(rec.terms.iter().all(|t| t.values.iter().any(|v| *v != 0.0)), "every term contributes");
}

#[test]
fn vanishing_factors_remove_their_terms() {
    let table = composite_table(CellBoundary::Periodic);
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 6, 6).unwrap();
    let mut s = state(&macro_mesh);
    s.potential = vec![0.0; macro_mesh.node_count()];
    s.displacement_prev = s.displacement.clone();
    s.displacement_prev2 = s.displacement.clone();
    let points = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 9, 9).unwrap();
    let rec = Evaluator::new(&table, &macro_mesh, points.nodes(), 0.25)
        .unwrap()
        .evaluate(&s, DT, true);
    for t in &rec.terms {
        if ["G", "J", "F", "H2", "Z", "W"].contains(&t.name) {
            assert!(t.values.iter().all(|v| *v == 0.0), "{}", t.name);
        }
    }
}

#[test]
fn single_phase_reconstructions_equal_the_homogenized_fields() {
    let law = homogeneous_law();
    let table = table(&disk_cell(0.2, CellBoundary::Periodic), &law, 3, true);
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 6, 6).unwrap();
    let points = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 12, 12).unwrap();
    let rec = Evaluator::new(&table, &macro_mesh, points.nodes(), 0.25)
        .unwrap()
        .evaluate(&state(&macro_mesh), DT, false);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10 * (1.0 + y.abs()));
    assert!(close(&rec.first_order.temperature, &rec.homogenized.temperature));
    assert!(close(&rec.second_order.temperature, &rec.homogenized.temperature));
    assert!(close(&rec.second_order.potential, &rec.homogenized.potential));
    assert!(close(&rec.second_order.displacement, &rec.homogenized.displacement));
}

#[test]
fn zeroed_correctors_collapse_bitwise() {
    let mut table = composite_table(CellBoundary::Periodic);
    for e in &mut table.entries {
        for (_, _, f) in e.first.entries_mut() {
            f.iter_mut().for_each(|v| *v = 0.0);
        }
        for (_, _, f) in e.second.as_mut().unwrap().entries_mut() {
            f.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 6, 6).unwrap();
    let points = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 10, 10).unwrap();
    let rec = Evaluator::new(&table, &macro_mesh, points.nodes(), 0.25)
        .unwrap()
        .evaluate(&state(&macro_mesh), DT, false);
    assert_eq!(rec.first_order, rec.homogenized);
    assert_eq!(rec.second_order, rec.homogenized);
}

#[test]
fn corrections_scale_with_epsilon() {
    let table = composite_table(CellBoundary::Periodic);
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 16, 16).unwrap();
    // nearly linear fields, so derivatives barely change across one period
    let mut s = state(&macro_mesh);
    let t = |x: f64, y: f64| 300.0 + 100.0 * x + 50.0 * y + 10.0 * x * y;
    s.temperature = field(&macro_mesh, t);
    s.temperature_prev = field(&macro_mesh, |x, y| t(x, y) - DT * 5.0 * (1.0 + x));
    s.potential = field(&macro_mesh, |x, y| 0.1 * x + 0.05 * y + 0.01 * x * y);
    let u = |x: f64, y: f64| [1e-3 * (x + 0.5 * y), 2e-3 * (y + 0.2 * x * y)];
    s.displacement = vector(&macro_mesh, u);
    s.displacement_prev = vector(&macro_mesh, |x, y| u(x, y).map(|v| 0.9 * v));
    s.displacement_prev2 = vector(&macro_mesh, |x, y| u(x, y).map(|v| 0.7 * v));
    let grid: Vec<[f64; 2]> = (0..20)
        .flat_map(|i| (0..20).map(move |j| [i as f64 / 20.0, j as f64 / 20.0]))
        .collect();
    let mut first = Vec::new();
    let mut second = Vec::new();
    let epsilons = [0.25, 0.125, 0.0625];
    for eps in epsilons {
        // same cell coordinates for every ε, in the period starting at x = (0.5, 0.25)
        let points: Vec<[f64; 2]> = grid.iter().map(|y| [0.5 + eps * y[0], 0.25 + eps * y[1]]).collect();
        let rec = Evaluator::new(&table, &macro_mesh, &points, eps).unwrap().evaluate(&s, DT, false);
        let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        first.push(max_diff(&rec.first_order.temperature, &rec.homogenized.temperature));
        second.push(max_diff(&rec.second_order.temperature, &rec.first_order.temperature));
    }
    for (values, expected) in [(&first, 1.0), (&second, 2.0)] {
        for r in rates(&epsilons, values) {
            assert!((r - expected).abs() <= 0.2, "{values:?}");
        }
    }
}

#[test]
fn dirichlet_correctors_vanish_on_cell_faces() {
    let table = composite_table(CellBoundary::Dirichlet);
    let macro_mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
    let points: Vec<[f64; 2]> = (0..=16).map(|i| [0.5, i as f64 / 16.0]).collect();
    let rec = Evaluator::new(&table, &macro_mesh, &points, 0.25)
        .unwrap()
        .evaluate(&state(&macro_mesh), DT, false);
    for i in 0..points.len() {
        assert!((rec.first_order.temperature[i] - rec.homogenized.temperature[i]).abs() < 1e-12);
    }
}
