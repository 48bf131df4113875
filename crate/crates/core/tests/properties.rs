use homs_core::expr::SpaceTimeFn;
use homs_core::fem::{assemble_diffusion, Space, ORDER2};
use homs_core::materials::{elasticity_tensor, PlaneMode};
use homs_core::mesh::build_rectangle_mesh;
use homs_core::metrics::{norm, relative_error, Norm};
use homs_core::reconstruct::recover_gradient;
use homs_core::tensor::Mat2;
use proptest::prelude::*;

fn fields(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    let v = || proptest::collection::vec(-10.0f64..10.0, n);
    (v(), v(), v())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_error_is_scale_invariant((a, r, _) in fields(16), k in -20i32..20) {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let c = 2f64.powi(k);
        let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
        let cr: Vec<f64> = r.iter().map(|v| c * v).collect();
        for kind in [Norm::L2, Norm::H1Semi] {
            let e = relative_error(&mesh, &a, &r, 1, kind).unwrap();
            prop_assert_eq!(relative_error(&mesh, &ca, &cr, 1, kind).unwrap(), e);
        }
    }

    #[test]
    fn relative_error_obeys_the_triangle_inequality((a, b, r) in fields(16)) {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        for kind in [Norm::L2, Norm::H1Semi] {
            let ear = relative_error(&mesh, &a, &r, 1, kind).unwrap();
            let eab = relative_error(&mesh, &a, &b, 1, kind).unwrap();
            let ebr = relative_error(&mesh, &b, &r, 1, kind).unwrap();
            let ratio = norm(&mesh, &b, 1, kind) / norm(&mesh, &r, 1, kind);
            prop_assert!(ear <= eab * ratio + ebr + 1e-12);
        }
    }

    #[test]
    fn elasticity_tensor_is_symmetric_and_positive(young in 1.0f64..1e7, nu in 0.01f64..0.49) {
        for mode in [PlaneMode::Strain, PlaneMode::Stress] {
            let c = elasticity_tensor(young, nu, mode).unwrap();
            prop_assert!(c.symmetry_defect() <= 1e-12 * c.max_abs());
            prop_assert!(c.symmetric_eigenvalues()[0] > 0.0);
        }
    }

    #[test]
    fn stiffness_annihilates_constants(k11 in 0.1f64..10.0, k22 in 0.1f64..10.0, k12 in -0.05f64..0.05) {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 3).unwrap();
        let space = Space::scalar(&mesh);
        let k = Mat2([[k11, k12], [k12, k22]]);
        let a = assemble_diffusion(&mesh, &space, &ORDER2, |_| k).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        prop_assert!(a.mul(&ones).iter().all(|v| v.abs() <= 1e-12 * a.max_abs()));
        prop_assert!(a.asymmetry() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn recovery_reproduces_linear_fields(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 5, 4).unwrap();
        let f: Vec<f64> = mesh.nodes().iter().map(|p| a * p[0] + b * p[1] + c).collect();
        for g in recover_gradient(&mesh, &f) {
            prop_assert!((g[0] - a).abs() <= 1e-10 && (g[1] - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn point_location_returns_convex_weights(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 7, 5).unwrap();
        let (e, bary) = mesh.locate_point([x, y]).unwrap();
        prop_assert!(bary.iter().all(|w| *w >= -1e-12));
        prop_assert!((bary.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let p = mesh.point(e, bary);
        prop_assert!((p[0] - x).abs() <= 1e-12 && (p[1] - y).abs() <= 1e-12);
    }

    #[test]
    fn expressions_agree_with_direct_evaluation(a in -100.0f64..100.0, b in 0.5f64..3.0, x in 0.0f64..1.0, t in 0.0f64..1.0) {
        let f = SpaceTimeFn::parse(&format!("{a} * x1 - {b} ^ 2 * sin(t) + x2 / {b}")).unwrap();
        let expected = a * x - b * b * t.sin() + 0.25 / b;
        prop_assert!((f.eval([x, 0.25], t) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn symmetric_eigenvalues_preserve_trace(a in -10.0f64..10.0, b in -10.0f64..10.0, d in -10.0f64..10.0) {
        let m = Mat2([[a, b], [b, d]]);
        let [l0, l1] = m.symmetric_eigenvalues();
        prop_assert!(l0 <= l1);
        prop_assert!((l0 + l1 - a - d).abs() <= 1e-12 * (1.0 + a.abs() + d.abs()));
        prop_assert!((l0 * l1 - (a * d - b * b)).abs() <= 1e-10 * (1.0 + (a * d).abs() + b * b));
    }
}
