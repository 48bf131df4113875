use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::quadrature::{QuadPoint, QuadratureRule};
use super::sparse::{CsrMatrix, Pattern, Space};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::tensor::{Mat2, Tensor4, Vec2};

/// Calls `f` at every quadrature point of the mesh, element by element.
pub fn for_each_quad_point(mesh: &Mesh, rule: &QuadratureRule, mut f: impl FnMut(&QuadPoint)) {
    for e in 0..mesh.triangle_count() {
        for qp in rule.points_of(mesh, e) {
            f(&qp);
        }
    }
}

/// `∫ A ∇u · ∇v` with a symmetric 2x2 coefficient.
pub fn assemble_diffusion(
    mesh: &Mesh,
    space: &Space,
    rule: &QuadratureRule,
    mut coef: impl FnMut(&QuadPoint) -> Mat2,
) -> Result<CsrMatrix> {
    assert_eq!(space.components(), 1, "diffusion form needs a scalar space");
    let mut m = space.zero_matrix();
    let mut local = [0.0; 9];
    for e in 0..mesh.triangle_count() {
        let g = mesh.geometry(e).grads;
        let mut a = Mat2::ZERO;
        for qp in rule.points_of(mesh, e) {
            let k = coef(&qp);
            if !k.is_symmetric(1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "diffusion coefficient is not symmetric in element {e}"
                )));
            }
            a += k * qp.weight;
        }
        for p in 0..3 {
            for q in 0..3 {
                local[3 * p + q] = a.bilinear(g[p], g[q]);
            }
        }
        space.scatter(&mut m, e, &local);
    }
    Ok(m)
}

/// `∫ ρ u · v`; block diagonal for vector spaces.
pub fn assemble_mass(
    mesh: &Mesh,
    space: &Space,
    rule: &QuadratureRule,
    mut coef: impl FnMut(&QuadPoint) -> f64,
) -> CsrMatrix {
    let c = space.components();
    let n = 3 * c;
    let mut m = space.zero_matrix();
    let mut local = vec![0.0; n * n];
    for e in 0..mesh.triangle_count() {
        let mut s = [[0.0; 3]; 3];
        for qp in rule.points_of(mesh, e) {
            let w = coef(&qp) * qp.weight;
            for p in 0..3 {
                for q in 0..3 {
                    s[p][q] += w * qp.bary[p] * qp.bary[q];
                }
            }
        }
        local.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..3 {
            for q in 0..3 {
                for i in 0..c {
                    local[(p * c + i) * n + q * c + i] = s[p][q];
                }
            }
        }
        space.scatter(&mut m, e, &local);
    }
    m
}

/// `∫ c_ijkl ∂_l u_k ∂_j v_i` on a two-component space.
pub fn assemble_elasticity(
    mesh: &Mesh,
    space: &Space,
    rule: &QuadratureRule,
    mut coef: impl FnMut(&QuadPoint) -> Tensor4,
) -> Result<CsrMatrix> {
    assert_eq!(space.components(), 2, "elasticity form needs a vector space");
    let mut m = space.zero_matrix();
    let mut local = [0.0; 36];
    for e in 0..mesh.triangle_count() {
        let g = mesh.geometry(e).grads;
        let mut c = Tensor4::ZERO;
        for qp in rule.points_of(mesh, e) {
            let t = coef(&qp);
            if t.symmetry_defect() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "elasticity tensor lacks the required symmetries in element {e}"
                )));
            }
            c += t * qp.weight;
        }
        for a in 0..3 {
            for i in 0..2 {
                for b in 0..3 {
                    for k in 0..2 {
                        let mut v = 0.0;
                        for j in 0..2 {
                            for l in 0..2 {
                                v += c.0[i][j][k][l] * g[a][j] * g[b][l];
                            }
                        }
                        local[(2 * a + i) * 6 + 2 * b + k] = v;
                    }
                }
            }
        }
        space.scatter(&mut m, e, &local);
    }
    Ok(m)
}

/// Rectangular coupling `B[(a,i), b] = ∫ β_ij φ_b ∂_j φ_a`: maps a nodal scalar field `θ` to
/// the vector load `∫ β_ij θ ∂_j v_i`.
pub fn assemble_coupling(
    mesh: &Mesh,
    rule: &QuadratureRule,
    mut coef: impl FnMut(&QuadPoint) -> Mat2,
) -> CsrMatrix {
    let n = mesh.node_count();
    let mut rows = vec![Vec::new(); 2 * n];
    for t in mesh.triangles() {
        for &a in t {
            for i in 0..2 {
                rows[2 * a + i].extend_from_slice(t);
            }
        }
    }
    let pattern = Arc::new(Pattern::from_rows(n, rows));
    let mut m = CsrMatrix::zeros(pattern.clone());
    for e in 0..mesh.triangle_count() {
        let t = mesh.triangles()[e];
        let g = mesh.geometry(e).grads;
        for qp in rule.points_of(mesh, e) {
            let beta = coef(&qp);
            for a in 0..3 {
                for i in 0..2 {
                    let div = beta.0[i][0] * g[a][0] + beta.0[i][1] * g[a][1];
                    for b in 0..3 {
                        let pos = pattern.find(2 * t[a] + i, t[b]).expect("coupling entry");
                        m.values_mut()[pos] += qp.weight * div * qp.bary[b];
                    }
                }
            }
        }
    }
    m
}

/// `∫ f v`
pub fn assemble_source(mesh: &Mesh, rule: &QuadratureRule, mut f: impl FnMut(&QuadPoint) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.node_count()];
    for e in 0..mesh.triangle_count() {
        let t = mesh.triangles()[e];
        for qp in rule.points_of(mesh, e) {
            let w = f(&qp) * qp.weight;
            for a in 0..3 {
                b[t[a]] += w * qp.bary[a];
            }
        }
    }
    b
}

/// `∫ g · ∇v`
pub fn assemble_flux(mesh: &Mesh, rule: &QuadratureRule, mut g: impl FnMut(&QuadPoint) -> Vec2) -> Vec<f64> {
    let mut b = vec![0.0; mesh.node_count()];
    for e in 0..mesh.triangle_count() {
        let t = mesh.triangles()[e];
        let grads = mesh.geometry(e).grads;
        let mut acc = [0.0; 2];
        for qp in rule.points_of(mesh, e) {
            let v = g(&qp);
            acc[0] += v[0] * qp.weight;
            acc[1] += v[1] * qp.weight;
        }
        for a in 0..3 {
            b[t[a]] += acc[0] * grads[a][0] + acc[1] * grads[a][1];
        }
    }
    b
}

/// `∫ f_i v_i` on an interleaved two-component space.
pub fn assemble_vector_source(
    mesh: &Mesh,
    rule: &QuadratureRule,
    mut f: impl FnMut(&QuadPoint) -> Vec2,
) -> Vec<f64> {
    let mut b = vec![0.0; 2 * mesh.node_count()];
    for e in 0..mesh.triangle_count() {
        let t = mesh.triangles()[e];
        for qp in rule.points_of(mesh, e) {
            let v = f(&qp);
            for a in 0..3 {
                b[2 * t[a]] += v[0] * qp.weight * qp.bary[a];
                b[2 * t[a] + 1] += v[1] * qp.weight * qp.bary[a];
            }
        }
    }
    b
}

/// `∫ g_ij ∂_j v_i` on an interleaved two-component space.
pub fn assemble_vector_flux(
    mesh: &Mesh,
    rule: &QuadratureRule,
    mut g: impl FnMut(&QuadPoint) -> Mat2,
) -> Vec<f64> {
    let mut b = vec![0.0; 2 * mesh.node_count()];
    for e in 0..mesh.triangle_count() {
        let t = mesh.triangles()[e];
        let grads = mesh.geometry(e).grads;
        let mut acc = Mat2::ZERO;
        for qp in rule.points_of(mesh, e) {
            acc += g(&qp) * qp.weight;
        }
        for a in 0..3 {
            for i in 0..2 {
                b[2 * t[a] + i] += acc.0[i][0] * grads[a][0] + acc.0[i][1] * grads[a][1];
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{ORDER2, ORDER4};
    use crate::materials::{elasticity_tensor, PlaneMode};
    use crate::mesh::{build_macro_mesh, Phase};

    fn right_triangle() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![Phase::Matrix],
        )
        .unwrap()
    }

    #[test]
    fn unit_stiffness_of_reference_triangle() {
        let mesh = right_triangle();
        let k = assemble_diffusion(&mesh, &Space::scalar(&mesh), &ORDER2, |_| Mat2::identity()).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let dense = k.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((dense[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_and_source_partition_of_unity() {
        let mesh = build_macro_mesh(0.125).unwrap();
        let m = assemble_mass(&mesh, &Space::scalar(&mesh), &ORDER2, |_| 1.0);
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let b = assemble_source(&mesh, &ORDER2, |_| 1.0);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonsymmetric_coefficient() {
        let mesh = right_triangle();
        let r = assemble_diffusion(&mesh, &Space::scalar(&mesh), &ORDER2, |_| Mat2([[1.0, 0.3], [0.0, 1.0]]));
        assert!(r.is_err());
    }

    #[test]
    fn quadrature_orders_agree_for_affine_coefficients() {
        let mesh = build_macro_mesh(0.25).unwrap();
        let space = Space::scalar(&mesh);
        let coef = |qp: &QuadPoint| Mat2::diag(4.0 + 0.3 * qp.x[0] - 0.2 * qp.x[1]);
        let a = assemble_diffusion(&mesh, &space, &ORDER2, coef).unwrap();
        let b = assemble_diffusion(&mesh, &space, &ORDER4, coef).unwrap();
        let scale = a.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn coupling_matrix_matches_flux_load() {
        let mesh = build_macro_mesh(0.25).unwrap();
        let theta: Vec<f64> = mesh.nodes().iter().map(|p| 1.0 + p[0] * p[1]).collect();
        let beta = Mat2([[2.0, 0.0], [0.0, 3.0]]);
        let b = assemble_coupling(&mesh, &ORDER2, |_| beta);
        let via_matrix = b.mul(&theta);
        let via_flux = assemble_vector_flux(&mesh, &ORDER2, |qp| {
            beta * mesh.interpolate(&theta, qp.element, qp.bary)
        });
        for (x, y) in via_matrix.iter().zip(&via_flux) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn elasticity_matrix_is_symmetric() {
        let mesh = build_macro_mesh(0.5).unwrap();
        let c = elasticity_tensor(1.0, 0.0, PlaneMode::Strain).unwrap();
        let k = assemble_elasticity(&mesh, &Space::vector(&mesh), &ORDER2, |_| c).unwrap();
        assert!(k.asymmetry() < 1e-14);
    }
}
