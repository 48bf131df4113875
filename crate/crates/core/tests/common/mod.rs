#![allow(dead_code)]

use homs_core::cell::{CellBoundary, CellDiscretization, FirstOrderCellSet};
use homs_core::homog::{build_table, Sequential, TableSettings, TemperatureTable};
use homs_core::materials::{MaterialLaw, PhaseLaw, ScalarLaw};
use homs_core::mesh::{build_unit_cell_mesh, Mesh, PhaseGeometry};
use homs_core::metrics::{norm, Norm};

pub fn disk() -> PhaseGeometry {
    PhaseGeometry::Disk {
        center: [0.5, 0.5],
        radius: 0.25,
    }
}

/// Inclusion band in the middle half of the cell along `y1`.
pub fn stripe() -> PhaseGeometry {
    PhaseGeometry::Stripe {
        axis: 0,
        lo: 0.25,
        hi: 0.75,
    }
}

pub fn disk_cell(h: f64, boundary: CellBoundary) -> CellDiscretization {
    CellDiscretization::new(build_unit_cell_mesh(&disk(), h).unwrap(), boundary).unwrap()
}

/// Both phases carry the matrix law of the example composite.
pub fn homogeneous_law() -> MaterialLaw {
    let base = MaterialLaw::example_composite();
    MaterialLaw::single_phase(base.matrix.clone(), base.range)
}

/// Temperature-independent single-phase law with unit-sized coefficients.
pub fn constant_law(k: f64, lambda: f64, beta: f64, rho: f64, young: f64) -> MaterialLaw {
    let c = ScalarLaw::constant;
    let law = PhaseLaw {
        rho: c(rho),
        c: c(1.0),
        k: c(k),
        lambda: c(lambda),
        beta: c(beta),
        young: c(young),
        poisson: c(0.25),
    };
    MaterialLaw::single_phase(law, [0.0, 1000.0])
}

pub fn table(disc: &CellDiscretization, law: &MaterialLaw, count: usize, second_order: bool) -> TemperatureTable {
    let mut settings = TableSettings::equidistant(law.range, count, 300.0);
    settings.second_order = second_order;
    build_table(disc, law, &settings, &Sequential).unwrap()
}

/// Full `H¹` norm of a nodal field.
pub fn h1_norm(mesh: &Mesh, field: &[f64], components: usize) -> f64 {
    let l2 = norm(mesh, field, components, Norm::L2);
    let semi = norm(mesh, field, components, Norm::H1Semi);
    (l2 * l2 + semi * semi).sqrt()
}

/// Slope of `log(e)` against `log(h)` between consecutive entries.
pub fn rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// `H¹` distance between two first-order corrector sets, over all families together.
pub fn first_order_distance(mesh: &Mesh, a: &FirstOrderCellSet, b: &FirstOrderCellSet) -> f64 {
    a.entries()
        .into_iter()
        .zip(b.entries())
        .map(|((_, comps, fa), (_, _, fb))| {
            let diff: Vec<f64> = fa.iter().zip(fb).map(|(x, y)| x - y).collect();
            h1_norm(mesh, &diff, comps).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

pub mod manufactured {
    use super::constant_law;
    use homs_core::expr::SpaceTimeFn;
    use homs_core::macroscale::{run, HeterogeneousMedium, Problem, TimeGrid};
    use homs_core::materials::MaterialLaw;
    use homs_core::mesh::build_rectangle_mesh;
    use homs_core::fem::{for_each_quad_point, ORDER4};
    use std::f64::consts::PI;

    fn bump(x: [f64; 2]) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin()
    }

    /// Uncoupled data: no sources, zero boundary and initial values, unit temperature.
    fn quiet(grid: TimeGrid) -> Problem {
        let mut p = Problem::example(grid);
        let zero = SpaceTimeFn::Constant(0.0);
        p.sources.heat = zero.clone();
        p.sources.charge = zero.clone();
        p.sources.force = [zero.clone(), zero.clone()];
        p.solver.tol = 1e-13;
        p
    }

    /// `β = 0` decouples the mechanics; `λ` only feeds Joule heating, which stays zero
    /// when the potential vanishes.
    pub fn law() -> MaterialLaw {
        constant_law(1.0, 1.0, 0.0, 1.0, 10.0)
    }

    /// Relative `L²` errors of the steady temperature `300 + 50 sin πx sin πy` after a few
    /// steps, of the potential `sin πx sin πy`, and of the static displacement
    /// `(1, 1) sin πx sin πy`, on an `n × n` mesh.
    pub fn spatial_errors(n: usize) -> [f64; 3] {
        let law = law();
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n).unwrap();
        let medium = HeterogeneousMedium { mesh: &mesh, law: &law };
        // true L² error against the exact profile, relative to its norm
        let rel = |a: &[f64], comps: usize, shift: f64| {
            let (mut err, mut reference) = (0.0, 0.0);
            for_each_quad_point(&mesh, &ORDER4, |qp| {
                let exact = bump(qp.x);
                let t = mesh.triangles()[qp.element];
                for c in 0..comps {
                    let uh: f64 = (0..3).map(|k| qp.bary[k] * (a[comps * t[k] + c] - shift)).sum();
                    err += qp.weight * (uh - exact).powi(2);
                    reference += qp.weight * exact * exact;
                }
            });
            (err / reference).sqrt()
        };

        // temperature: k = 1, Φ = 0
        let mut p = quiet(TimeGrid::new(0.01, 10).unwrap());
        p.sources.heat = SpaceTimeFn::closure(|x, _| 50.0 * 2.0 * PI * PI * bump(x));
        p.initial.temperature = SpaceTimeFn::closure(|x, _| 300.0 + 50.0 * bump(x));
        let t = run(&medium, &p).unwrap();
        let temperature: Vec<f64> = t.last().temperature.iter().map(|v| (v - 300.0) / 50.0).collect();

        // potential: λ = 1, one step
        let mut p = quiet(TimeGrid::new(0.01, 1).unwrap());
        p.sources.charge = SpaceTimeFn::closure(|x, _| 2.0 * PI * PI * bump(x));
        let phi = run(&medium, &p).unwrap();

        // displacement: plane strain with E = 10, ν = 1/4 gives Lamé λ = μ = 4
        let (lam, mu) = (4.0, 4.0);
        let force = move |x: [f64; 2], _| {
            let s = bump(x);
            let cc = (PI * x[0]).cos() * (PI * x[1]).cos();
            2.0 * PI * PI * mu * s - (lam + mu) * PI * PI * (cc - s)
        };
        let mut p = quiet(TimeGrid::new(0.1, 60).unwrap());
        p.snapshot_stride = 60;
        p.sources.force = [SpaceTimeFn::closure(force), SpaceTimeFn::closure(force)];
        p.initial.displacement = [SpaceTimeFn::closure(|x, _| bump(x)), SpaceTimeFn::closure(|x, _| bump(x))];
        let u = run(&medium, &p).unwrap();

        [
            rel(&temperature, 1, 0.0),
            rel(&phi.last().potential, 1, 0.0),
            rel(&u.last().displacement, 2, 0.0),
        ]
    }

    /// Final displacements of the mechanical scheme under a time-periodic load, one per
    /// step count, all on the same mesh.
    pub fn mechanical_finals(steps: &[usize]) -> (homs_core::mesh::Mesh, Vec<Vec<f64>>) {
        let law = law();
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
        let finals = steps
            .iter()
            .map(|&n| {
                let medium = HeterogeneousMedium { mesh: &mesh, law: &law };
                let mut p = quiet(TimeGrid::covering(0.5, n).unwrap());
                let load = SpaceTimeFn::closure(|_, t| 100.0 * (2.0 * PI * t).sin());
                p.sources.force = [load.clone(), load];
                p.snapshot_stride = n;
                run(&medium, &p).unwrap().last().displacement.clone()
            })
            .collect();
        (mesh, finals)
    }
}
