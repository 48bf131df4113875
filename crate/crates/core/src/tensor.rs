//! Small dense tensors for two-dimensional material coefficients.

use core::ops::{Add, AddAssign, Mul, Sub};

use crate::float::Real;

/// A point or vector in the plane.
pub type Vec2 = [f64; 2];

/// Second-order tensor in two dimensions, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);

    pub fn identity() -> Self {
        Mat2::diag(1.0)
    }

    /// `value * I`
    pub fn diag(value: f64) -> Self {
        Mat2([[value, 0.0], [0.0, value]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Mat2([[a[0][0], a[1][0]], [a[0][1], a[1][1]]])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0];
        let d = self.0[1][1];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let mean = 0.5 * (a + d);
        let radius = (0.5 * (a - d)).hypot(b);
        [mean - radius, mean + radius]
    }

    /// `v^T A w`
    pub fn bilinear(&self, v: Vec2, w: Vec2) -> f64 {
        let a = &self.0;
        v[0] * (a[0][0] * w[0] + a[0][1] * w[1]) + v[1] * (a[1][0] * w[0] + a[1][1] * w[1])
    }

    /// `A w`
    pub fn apply(&self, w: Vec2) -> Vec2 {
        let a = &self.0;
        [a[0][0] * w[0] + a[0][1] * w[1], a[1][0] * w[0] + a[1][1] * w[1]]
    }

    pub fn lerp(&self, other: &Mat2, theta: f64) -> Mat2 {
        *self * (1.0 - theta) + *other * theta
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        let mut out = self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }
}

/// Fourth-order tensor `c_ijkl` in two dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor4(pub [[[[f64; 2]; 2]; 2]; 2]);

impl Tensor4 {
    pub const ZERO: Tensor4 = Tensor4([[[[0.0; 2]; 2]; 2]; 2]);

    /// `lambda δ_ij δ_kl + mu (δ_ik δ_jl + δ_il δ_jk)`
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut c = Tensor4::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c.0[i][j][k][l] = lambda * delta(i, j) * delta(k, l)
                            + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                    }
                }
            }
        }
        c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest violation of `c_ijkl = c_jikl = c_ijlk = c_klij`, relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let c = self.0[i][j][k][l];
                        worst = worst
                            .max((c - self.0[j][i][k][l]).abs())
                            .max((c - self.0[i][j][l][k]).abs())
                            .max((c - self.0[k][l][i][j]).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Matrix of the quadratic form `c_ijkl ζ_ij ζ_kl` on symmetric `ζ` in the orthonormal
    /// basis `(ζ11, ζ22, √2 ζ12)`.
    pub fn kelvin_matrix(&self) -> [[f64; 3]; 3] {
        let s = core::f64::consts::SQRT_2;
        let c = |i, j, k, l| self.get(i, j, k, l);
        [
            [c(0, 0, 0, 0), c(0, 0, 1, 1), s * c(0, 0, 0, 1)],
            [c(1, 1, 0, 0), c(1, 1, 1, 1), s * c(1, 1, 0, 1)],
            [s * c(0, 1, 0, 0), s * c(0, 1, 1, 1), 2.0 * c(0, 1, 0, 1)],
        ]
    }

    /// Extreme values of `c ζ:ζ / |ζ|²` over nonzero symmetric `ζ`, ascending.
    pub fn symmetric_eigenvalues(&self) -> [f64; 3] {
        let mut m = self.kelvin_matrix();
        // symmetrize in case of round-off
        for i in 0..3 {
            for j in 0..i {
                let v = 0.5 * (m[i][j] + m[j][i]);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        symmetric3_eigenvalues(m)
    }

    /// `c_ijkl g_kl`
    pub fn contract(&self, g: &Mat2) -> Mat2 {
        let mut out = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += self.0[i][j][k][l] * g.0[k][l];
                    }
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    pub fn lerp(&self, other: &Tensor4, theta: f64) -> Tensor4 {
        *self * (1.0 - theta) + *other * theta
    }
}

impl Add for Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: Tensor4) -> Tensor4 {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for Tensor4 {
    fn add_assign(&mut self, rhs: Tensor4) {
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        self.0[i][j][k][l] += rhs.0[i][j][k][l];
                    }
                }
            }
        }
    }
}

impl Sub for Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: Tensor4) -> Tensor4 {
        self + rhs * -1.0
    }
}

impl Mul<f64> for Tensor4 {
    type Output = Tensor4;
    fn mul(self, s: f64) -> Tensor4 {
        let mut out = self;
        for v in out.0.iter_mut().flatten().flatten().flatten() {
            *v *= s;
        }
        out
    }
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric3_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
            let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut eig = [a[0][0], a[1][1], a[2][2]];
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat2_eigenvalues_of_diagonal() {
        let m = Mat2([[3.0, 0.0], [0.0, 1.0]]);
        assert_eq!(m.symmetric_eigenvalues(), [1.0, 3.0]);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // eigenvalues 1, 2, 4 rotated by a permutation-free similarity
        let a = [[2.0, 0.0, 0.0], [0.0, 3.0, 1.0], [0.0, 1.0, 3.0]];
        let e = symmetric3_eigenvalues(a);
        assert!((e[0] - 2.0).abs() < 1e-14);
        assert!((e[1] - 2.0).abs() < 1e-14);
        assert!((e[2] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_tensor_has_full_symmetry() {
        let c = Tensor4::isotropic(1.3, 0.7);
        assert_eq!(c.symmetry_defect(), 0.0);
        // eigenvalues on symmetric matrices: 2mu (deviatoric, twice) and 2(lambda+mu) (volumetric)
        let e = c.symmetric_eigenvalues();
        assert!((e[0] - 1.4).abs() < 1e-13);
        assert!((e[1] - 1.4).abs() < 1e-13);
        assert!((e[2] - 4.0).abs() < 1e-13);
    }
}
