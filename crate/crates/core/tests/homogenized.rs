mod common;

use common::*;
use homs_core::cell::{CellBoundary, CellDiscretization};
use homs_core::homog::{build_table, compute_coefficients, verify_identities, Sequential, TableSettings};
use homs_core::materials::{DerivativeOrder, MaterialLaw};
use homs_core::mesh::{build_unit_cell_mesh, Phase};

fn k_hat_11(geometry: &homs_core::mesh::PhaseGeometry, h: f64, t: f64) -> (f64, f64) {
    let law = MaterialLaw::example_composite();
    let disc = CellDiscretization::new(build_unit_cell_mesh(geometry, h).unwrap(), CellBoundary::Periodic).unwrap();
    let first = disc.solve_first_order(&law, t).unwrap();
    let hom = compute_coefficients(disc.mesh(), &law, &first, t);
    (hom.k_hat.get(0, 0), hom.k_hat.get(1, 1))
}

#[test]
fn identities_hold_at_several_temperatures() {
    let law = MaterialLaw::example_composite();
    for boundary in [CellBoundary::Periodic, CellBoundary::Dirichlet] {
        let disc = disk_cell(0.1, boundary);
        for t in [260.0, 400.0, 550.0, 700.0, 900.0] {
            let first = disc.solve_first_order(&law, t).unwrap();
            let hom = compute_coefficients(disc.mesh(), &law, &first, t);
            let report = verify_identities(&hom);
            assert!(report.passes(1e-8), "{boundary:?} at {t}: {report:?}");
        }
    }
}

#[test]
fn laminate_matches_one_dimensional_means() {
    let law = MaterialLaw::example_composite();
    let km = law.properties(Phase::Matrix, 300.0, DerivativeOrder::Value).k;
    let ki = law.properties(Phase::Inclusion, 300.0, DerivativeOrder::Value).k;
    let harmonic = 2.0 / (1.0 / km + 1.0 / ki);
    let arithmetic = 0.5 * (km + ki);
    assert!((harmonic - 0.081584).abs() < 1e-6);
    assert!((arithmetic - 2.0806).abs() < 1e-4);
    for h in [0.2, 0.1, 0.05] {
        let (k11, k22) = k_hat_11(&stripe(), h, 300.0);
        assert!(((k11 - harmonic) / harmonic).abs() < 1e-3, "h {h}: {k11}");
        assert!(((k22 - arithmetic) / arithmetic).abs() < 1e-3, "h {h}: {k22}");
    }
}

#[test]
fn disk_coefficient_converges_at_second_order() {
    let hs = [0.2, 0.1, 0.05, 0.025];
    let k: Vec<f64> = hs.iter().map(|&h| k_hat_11(&disk(), h, 300.0).0).collect();
    let d: Vec<f64> = k.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    println!("k11 {k:?} ratios {ratios:?}");
    assert!(ratios.last().unwrap() > &3.0 && ratios.last().unwrap() < &5.5);
}

#[test]
fn coefficients_respect_phase_bounds() {
    let law = MaterialLaw::example_composite();
    let disc = disk_cell(0.1, CellBoundary::Periodic);
    let table = table(&disc, &law, 8, false);
    for (t, e) in table.temperatures.iter().zip(&table.entries) {
        let m = law.properties(Phase::Matrix, *t, DerivativeOrder::Value);
        let i = law.properties(Phase::Inclusion, *t, DerivativeOrder::Value);
        for (mat, a, b) in [(e.hom.k_hat, m.k, i.k), (e.hom.lambda_hat, m.lambda, i.lambda), (e.hom.beta_hat, m.beta, i.beta)] {
            let [lo, hi] = mat.symmetric_eigenvalues();
            assert!(lo >= a.min(b) && hi <= a.max(b), "at {t}: {lo} {hi} not in [{a}, {b}]");
        }
        assert!(e.hom.c_hat.symmetric_eigenvalues()[0] > 0.0);
        assert!(e.hom.c_hat.symmetry_defect() <= 1e-8 * e.hom.c_hat.max_abs());
    }
}

#[test]
fn table_rejects_bad_temperature_lists() {
    let law = MaterialLaw::example_composite();
    let disc = disk_cell(0.25, CellBoundary::Periodic);
    let mut settings = TableSettings::equidistant([300.0, 400.0], 3, 300.0);
    settings.temperatures = vec![300.0];
    assert!(build_table(&disc, &law, &settings, &Sequential).is_err());
    settings.temperatures = vec![300.0, 300.0];
    assert!(build_table(&disc, &law, &settings, &Sequential).is_err());
    settings.temperatures = vec![300.0, 990.0];
    assert!(build_table(&disc, &law, &settings, &Sequential).is_err());
}

#[test]
fn lookups_blend_and_clamp() {
    let law = MaterialLaw::example_composite();
    let disc = disk_cell(0.2, CellBoundary::Periodic);
    let mut settings = TableSettings::equidistant([300.0, 500.0], 3, 300.0);
    settings.second_order = false;
    let table = build_table(&disc, &law, &settings, &Sequential).unwrap();
    let (mid, clamped) = table.coefficients(350.0);
    assert!(!clamped);
    let a = table.entries[0].hom.k_hat.get(0, 0);
    let b = table.entries[1].hom.k_hat.get(0, 0);
    assert!((mid.k_hat.get(0, 0) - 0.5 * (a + b)).abs() <= 1e-14 * a.abs());
    let (low, clamped) = table.coefficients(200.0);
    assert!(clamped);
    assert_eq!(low.k_hat, table.entries[0].hom.k_hat);
    assert!(table.bracket(600.0).clamped);
}
