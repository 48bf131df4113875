//! Discrete norms, relative errors and error series against a fine reference.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::homog::{Executor, TemperatureTable};
use crate::macroscale::{Snapshot, Trajectory};
use crate::mesh::Mesh;
use crate::reconstruct::Evaluator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    /// `H¹` seminorm from elementwise gradients.
    H1Semi,
}

/// Norm of a P1 field with `components` values per node (interleaved), integrated exactly.
pub fn norm(mesh: &Mesh, field: &[f64], components: usize, kind: Norm) -> f64 {
    norm_squared(mesh, field, components, kind).sqrt()
}

fn norm_squared(mesh: &Mesh, field: &[f64], components: usize, kind: Norm) -> f64 {
    let mut total = 0.0;
    for (e, t) in mesh.triangles().iter().enumerate() {
        let g = mesh.geometry(e);
        for c in 0..components {
            let v = [0, 1, 2].map(|a| field[components * t[a] + c]);
            total += match kind {
                // ∫u² over a triangle for linear u
                Norm::L2 => {
                    let s = v[0] + v[1] + v[2];
                    g.area / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + s * s)
                }
                Norm::H1Semi => {
                    let mut d = [0.0; 2];
                    for a in 0..3 {
                        d[0] += v[a] * g.grads[a][0];
                        d[1] += v[a] * g.grads[a][1];
                    }
                    g.area * (d[0] * d[0] + d[1] * d[1])
                }
            };
        }
    }
    total
}

/// `‖a − r‖ / ‖r‖`.
pub fn relative_error(mesh: &Mesh, approx: &[f64], reference: &[f64], components: usize, kind: Norm) -> Result<f64> {
    if approx.len() != reference.len() || reference.len() != components * mesh.node_count() {
        return Err(Error::InvalidArgument(format!(
            "field lengths {} and {} do not match {} nodes with {components} components",
            approx.len(),
            reference.len(),
            mesh.node_count()
        )));
    }
    let r = norm(mesh, reference, components, kind);
    if !(r > 0.0) {
        return Err(Error::ZeroReference);
    }
    let diff: Vec<f64> = approx.iter().zip(reference).map(|(a, b)| a - b).collect();
    Ok(norm(mesh, &diff, components, kind) / r)
}

/// Column names after `time`, in the order stored in [`ErrorSeries::rows`].
pub const COLUMNS: [&str; 18] = [
    "T_hom_L2",
    "T_hom_H1",
    "T_loms_L2",
    "T_loms_H1",
    "T_homs_L2",
    "T_homs_H1",
    "Phi_hom_L2",
    "Phi_hom_H1",
    "Phi_loms_L2",
    "Phi_loms_H1",
    "Phi_homs_L2",
    "Phi_homs_H1",
    "U_hom_L2",
    "U_hom_H1",
    "U_loms_L2",
    "U_loms_H1",
    "U_homs_L2",
    "U_homs_H1",
];

/// Index into a row of [`ErrorSeries`].
pub fn column(field: usize, order: usize, kind: Norm) -> usize {
    6 * field + 2 * order + (kind == Norm::H1Semi) as usize
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub rows: Vec<[f64; 18]>,
}

impl ErrorSeries {
    pub fn header() -> String {
        let mut s = String::from("time");
        for c in COLUMNS {
            s.push(',');
            s.push_str(c);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::header();
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            let _ = write!(out, "{t:.6}");
            for v in row {
                let _ = write!(out, ",{v:.9e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> Option<&[f64; 18]> {
        self.rows.last()
    }
}

/// All 18 relative errors of the reconstructions of one macroscopic snapshot against the
/// reference fields on the fine mesh.
pub fn snapshot_errors(
    evaluator: &Evaluator<'_>,
    fine_mesh: &Mesh,
    reference: &Snapshot,
    macro_snapshot: &Snapshot,
    dt: f64,
) -> Result<[f64; 18]> {
    let rec = evaluator.evaluate(macro_snapshot, dt, false);
    let mut row = [0.0; 18];
    let orders = [&rec.homogenized, &rec.first_order, &rec.second_order];
    for (o, set) in orders.iter().enumerate() {
        let pairs: [(&[f64], &[f64], usize); 3] = [
            (&set.temperature, &reference.temperature, 1),
            (&set.potential, &reference.potential, 1),
            (&set.displacement, &reference.displacement, 2),
        ];
        for (f, (a, r, comps)) in pairs.into_iter().enumerate() {
            for kind in [Norm::L2, Norm::H1Semi] {
                row[column(f, o, kind)] = relative_error(fine_mesh, a, r, comps, kind)?;
            }
        }
    }
    Ok(row)
}

/// Error series over every step stored in both trajectories, the initial state excluded.
#[allow(clippy::too_many_arguments)]
pub fn evolutive_errors<E: Executor>(
    fine_mesh: &Mesh,
    reference: &Trajectory,
    macro_mesh: &Mesh,
    macroscopic: &Trajectory,
    table: &TemperatureTable,
    epsilon: f64,
    exec: &E,
) -> Result<ErrorSeries> {
    let evaluator = Evaluator::new(table, macro_mesh, fine_mesh.nodes(), epsilon)?;
    let pairs: Vec<(&Snapshot, &Snapshot)> = reference
        .snapshots
        .iter()
        .filter(|s| s.step > 0)
        .filter_map(|r| macroscopic.at_step(r.step).map(|m| (r, m)))
        .collect();
    let dt = macroscopic.grid.dt;
    let rows = exec.map(pairs.len(), &|i| {
        let (r, m) = pairs[i];
        snapshot_errors(&evaluator, fine_mesh, r, m, dt).map_err(|e| e.at_step(r.step))
    });
    let mut series = ErrorSeries::default();
    for ((r, _), row) in pairs.iter().zip(rows) {
        series.times.push(r.time);
        series.steps.push(r.step);
        series.rows.push(row?);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle_mesh;

    #[test]
    fn l2_norm_of_linear_field_is_exact() {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let f: Vec<f64> = mesh.nodes().iter().map(|p| p[0]).collect();
        // ∫x² = 1/3
        assert!((norm(&mesh, &f, 1, Norm::L2).powi(2) - 1.0 / 3.0).abs() < 1e-14);
        assert!((norm(&mesh, &f, 1, Norm::H1Semi) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_shift_has_zero_seminorm_error() {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4).unwrap();
        let r: Vec<f64> = mesh.nodes().iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let a: Vec<f64> = r.iter().map(|v| v + 3.5).collect();
        assert!(relative_error(&mesh, &a, &r, 1, Norm::H1Semi).unwrap() < 1e-14);
        assert!(relative_error(&mesh, &r, &r, 1, Norm::L2).unwrap() == 0.0);
    }

    #[test]
    fn zero_reference_is_rejected() {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 2, 2).unwrap();
        let z = alloc::vec![0.0; mesh.node_count()];
        let one = alloc::vec![1.0; mesh.node_count()];
        assert!(relative_error(&mesh, &one, &z, 1, Norm::L2).is_err());
    }

    #[test]
    fn header_has_time_and_eighteen_columns() {
        assert_eq!(ErrorSeries::header().split(',').count(), 19);
        assert_eq!(COLUMNS[column(2, 2, Norm::H1Semi)], "U_homs_H1");
        assert_eq!(COLUMNS[column(1, 0, Norm::L2)], "Phi_hom_L2");
    }
}
