mod common;

use common::*;
use homs_core::cell::CellBoundary;
use homs_core::dns::{build_dns_mesh, run_dns, DnsConfig};
use homs_core::expr::SpaceTimeFn;
use homs_core::homog::Sequential;
use homs_core::macroscale::{run, HomogenizedMedium, Problem, TimeGrid};
use homs_core::materials::MaterialLaw;
use homs_core::metrics::{evolutive_errors, norm, Norm};

fn config(epsilon: f64, cell_h: f64) -> DnsConfig {
    DnsConfig {
        epsilon,
        geometry: disk(),
        cell_h,
    }
}

#[test]
fn identical_phases_reproduce_the_macro_trajectory() {
    let law = homogeneous_law();
    let table = table(&disk_cell(0.25, CellBoundary::Periodic), &law, 3, true);
    let mesh = build_dns_mesh(&config(0.5, 0.25)).unwrap();
    let mut p = Problem::example(TimeGrid::new(1e-3, 10).unwrap());
    p.solver.tol = 1e-13;
    let dns = run_dns(&mesh, &law, &p).unwrap();
    let mac = run(&HomogenizedMedium { mesh: &mesh, table: &table }, &p).unwrap();
    for (a, b) in dns.snapshots.iter().zip(&mac.snapshots) {
        let pairs = [
            (&a.temperature, &b.temperature),
            (&a.potential, &b.potential),
            (&a.displacement, &b.displacement),
        ];
        for (x, y) in pairs {
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
            let worst = x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(worst <= 1e-8 * scale, "step {}: {worst} vs scale {scale}", a.step);
        }
    }
    let errors = evolutive_errors(&mesh, &dns, &mesh, &mac, &table, 0.5, &Sequential).unwrap();
    assert_eq!(errors.rows.len(), 10);
    assert!(errors.rows.iter().flatten().all(|e| *e <= 1e-8));
}

#[test]
fn stationary_compatible_data_stays_constant() {
    let law = MaterialLaw::example_composite();
    let mesh = build_dns_mesh(&config(0.5, 0.25)).unwrap();
    let mut p = Problem::example(TimeGrid::new(1e-3, 20).unwrap());
    let zero = SpaceTimeFn::Constant(0.0);
    p.sources.heat = zero.clone();
    p.sources.charge = zero.clone();
    p.sources.force = [zero.clone(), zero];
    let tr = run_dns(&mesh, &law, &p).unwrap();
    let last = tr.last();
    assert!(last.temperature.iter().all(|t| (t - 300.0).abs() < 1e-10));
    assert!(last.displacement.iter().all(|u| u.abs() < 1e-10));
}

#[test]
fn refining_the_fine_mesh_barely_changes_the_solution() {
    let law = MaterialLaw::example_composite();
    let p = Problem::example(TimeGrid::new(1e-3, 20).unwrap()).scale_sources(0.1);
    let norms: Vec<f64> = [0.2, 0.1]
        .iter()
        .map(|&h| {
            let mesh = build_dns_mesh(&config(0.5, h)).unwrap();
            let tr = run_dns(&mesh, &law, &p).unwrap();
            norm(&mesh, &tr.last().temperature, 1, Norm::L2)
        })
        .collect();
    assert!((norms[0] - norms[1]).abs() < 0.01 * norms[1], "{norms:?}");
}
