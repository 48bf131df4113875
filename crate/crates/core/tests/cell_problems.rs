mod common;

use common::*;
use homs_core::cell::{cell_solve_count, CellBoundary, CellDiscretization};
use homs_core::materials::{MaterialLaw, ScalarLaw};
use homs_core::mesh::build_unit_cell_mesh;

fn find_node(nodes: &[[f64; 2]], p: [f64; 2]) -> usize {
    nodes
        .iter()
        .position(|q| (q[0] - p[0]).abs() < 1e-10 && (q[1] - p[1]).abs() < 1e-10)
        .unwrap()
}

#[test]
fn laminate_corrector_depends_on_normal_coordinate_only() {
    let mut law = MaterialLaw::example_composite();
    law.matrix.k = ScalarLaw::constant(4.0);
    law.inclusion.k = ScalarLaw::constant(0.04);
    let mesh = build_unit_cell_mesh(&stripe(), 0.05).unwrap();
    for boundary in [CellBoundary::Periodic, CellBoundary::Dirichlet] {
        let disc = CellDiscretization::new(mesh.clone(), boundary).unwrap();
        let first = disc.solve_first_order(&law, 300.0).unwrap();
        let nodes = mesh.nodes();
        let mut worst: f64 = 0.0;
        for (i, p) in nodes.iter().enumerate() {
            for (j, q) in nodes.iter().enumerate() {
                if (p[0] - q[0]).abs() < 1e-12 {
                    worst = worst.max((first.m[0][i] - first.m[0][j]).abs());
                }
            }
        }
        if boundary == CellBoundary::Periodic {
            assert!(worst <= 1e-8, "variation across y2: {worst}");
        }
        // the transverse corrector vanishes for a laminate
        assert!(first.m[1].iter().all(|v| v.abs() <= 1e-8) || boundary == CellBoundary::Dirichlet);
    }
}

#[test]
fn correctors_are_odd_under_mid_plane_reflection() {
    let disc = disk_cell(0.1, CellBoundary::Periodic);
    let law = MaterialLaw::example_composite();
    let first = disc.solve_first_order(&law, 400.0).unwrap();
    let nodes = disc.mesh().nodes();
    for (i, p) in nodes.iter().enumerate() {
        let j = find_node(nodes, [1.0 - p[0], p[1]]);
        if p[0] > 1e-12 && p[0] < 1.0 - 1e-12 {
            assert!((first.m[0][i] + first.m[0][j]).abs() <= 1e-8, "M1 at {p:?}");
        }
        // M2 is even under the same reflection
        assert!((first.m[1][i] - first.m[1][j]).abs() <= 1e-8, "M2 at {p:?}");
    }
}

#[test]
fn identical_phases_give_vanishing_correctors() {
    let law = homogeneous_law();
    for boundary in [CellBoundary::Periodic, CellBoundary::Dirichlet] {
        let disc = disk_cell(0.2, boundary);
        let table = table(&disc, &law, 3, true);
        let entry = &table.entries[1];
        let mesh = disc.mesh();
        let mut families = 0;
        for (name, comps, f) in entry.first.entries() {
            assert!(h1_norm(mesh, f, comps) <= 1e-10, "{name}");
            families += 1;
        }
        for (name, comps, f) in entry.second.as_ref().unwrap().entries() {
            assert!(h1_norm(mesh, f, comps) <= 1e-10, "{name}");
            families += 1;
        }
        assert!(families > 20);
    }
}

#[test]
fn solve_counter_tracks_cell_solves() {
    let disc = disk_cell(0.25, CellBoundary::Periodic);
    let before = cell_solve_count();
    disc.solve_first_order(&MaterialLaw::example_composite(), 300.0).unwrap();
    // two thermal, two electric, four mechanical and one thermal-stress problem
    assert!(cell_solve_count() - before >= 9);
}

#[test]
fn correctors_vary_continuously_with_temperature() {
    let disc = disk_cell(0.1, CellBoundary::Periodic);
    let law = MaterialLaw::example_composite();
    let base = disc.solve_first_order(&law, 500.0).unwrap();
    // conductivities of the example are proportional across phases, so M itself is constant
    let m: Vec<f64> = disc.solve_first_order(&law, 510.0).unwrap().m[0].iter().zip(&base.m[0]).map(|(a, b)| a - b).collect();
    assert!(h1_norm(disc.mesh(), &m, 1) < 1e-10);
    let mut previous = f64::INFINITY;
    for delta in [10.0, 5.0, 2.5] {
        let moved = disc.solve_first_order(&law, 500.0 + delta).unwrap();
        let d = first_order_distance(disc.mesh(), &moved, &base);
        assert!(d < previous);
        previous = d;
    }
}
