use alloc::vec;
use alloc::vec::Vec;

use super::constraints::Reduction;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::float::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Target relative residual `‖Ax − b‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Achieved relative residual.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite matrix.
/// `x` holds the initial guess on entry and the solution on return.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolveOptions) -> Result<SolveReport> {
    let n = b.len();
    assert_eq!(a.rows(), n);
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;

    // The outer loop restarts from the true residual if the recursive one drifted.
    loop {
        a.mul_into(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut rnorm = dot(&r, &r).sqrt();
        if rnorm <= opts.tol * bnorm {
            return Ok(SolveReport {
                iterations,
                residual: rnorm / bnorm,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: rnorm / bnorm,
            });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < opts.max_iter {
            iterations += 1;
            a.mul_into(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: rnorm / bnorm,
                });
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            rnorm = dot(&r, &r).sqrt();
            if rnorm <= opts.tol * bnorm {
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

/// Solves `A u = b` subject to constraints: fixed dofs take `fixed_values`, the rest are
/// solved for. `guess` is a full-length warm start. Returns the full-length solution.
pub fn solve_constrained(
    a: &CsrMatrix,
    b: &[f64],
    reduction: &Reduction,
    fixed_values: &[f64],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let ar = reduction.reduce_matrix(a);
    let br = reduction.reduce_rhs(a, b, fixed_values);
    let constraints = reduction.constraints();
    let mut x = match guess {
        Some(g) => constraints.restrict(g),
        None => vec![0.0; constraints.free_count()],
    };
    let report = solve_spd(&ar, &br, &mut x, opts)?;
    Ok((constraints.expand(&x, fixed_values), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_two_by_two() {
        let id = CsrMatrix::identity(3);
        let mut x = vec![0.0; 3];
        solve_spd(&id, &[1.0, 2.0, 3.0], &mut x, &SolveOptions::default()).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);

        let a = CsrMatrix::from_dense(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let mut x = vec![0.0; 2];
        let rep = solve_spd(&a, &[1.0, 1.0], &mut x, &SolveOptions::default()).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14 && (x[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!(rep.residual <= 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let a = CsrMatrix::from_dense(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let mut x = vec![0.0; 3];
        let opts = SolveOptions {
            tol: 1e-14,
            max_iter: 1,
        };
        match solve_spd(&a, &[1.0, 2.0, 3.0], &mut x, &opts) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }
}
