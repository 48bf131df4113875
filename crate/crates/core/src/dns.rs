//! Direct simulation on a mesh that resolves every period of the microstructure.

use alloc::format;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::macroscale::{run_with, HeterogeneousMedium, Problem, Snapshot, Trajectory};
use crate::materials::MaterialLaw;
use crate::mesh::{build_unit_cell_mesh, tile_unit_cell, Mesh, PhaseGeometry};

/// Fine-mesh settings. The time grid, data and solver options come from the [`Problem`].
#[derive(Clone, Debug, PartialEq)]
pub struct DnsConfig {
    pub epsilon: f64,
    pub geometry: PhaseGeometry,
    /// Element size of the cell template, relative to one period.
    pub cell_h: f64,
}

/// Number of periods per side, `1/ε`, which must be an integer.
pub fn periods_per_side(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must lie in (0, 1]")));
    }
    let n = 1.0 / epsilon;
    let r = n.round();
    if (n - r).abs() > 1e-9 * n {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} is not the reciprocal of an integer"
        )));
    }
    Ok(r as usize)
}

/// Periodic tiling of the cell mesh, so phase tags follow `x ↦ frac(x/ε)` exactly.
pub fn build_dns_mesh(config: &DnsConfig) -> Result<Mesh> {
    let n = periods_per_side(config.epsilon)?;
    let cell = build_unit_cell_mesh(&config.geometry, config.cell_h)?;
    tile_unit_cell(&cell, n)
}

pub fn run_dns(mesh: &Mesh, law: &MaterialLaw, problem: &Problem) -> Result<Trajectory> {
    run_dns_with(mesh, law, problem, |_| {})
}

pub fn run_dns_with(
    mesh: &Mesh,
    law: &MaterialLaw,
    problem: &Problem,
    on_step: impl FnMut(&Snapshot),
) -> Result<Trajectory> {
    let medium = HeterogeneousMedium { mesh, law };
    run_with(&medium, problem, on_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_must_be_reciprocal_integer() {
        assert_eq!(periods_per_side(0.25).unwrap(), 4);
        assert_eq!(periods_per_side(0.1).unwrap(), 10);
        assert!(periods_per_side(0.3).is_err());
        assert!(periods_per_side(0.0).is_err());
    }

    #[test]
    fn tiled_mesh_follows_periodic_geometry() {
        let cfg = DnsConfig {
            epsilon: 0.25,
            geometry: PhaseGeometry::Disk {
                center: [0.5, 0.5],
                radius: 0.25,
            },
            cell_h: 0.2,
        };
        let mesh = build_dns_mesh(&cfg).unwrap();
        for e in 0..mesh.triangle_count() {
            let c = mesh.centroid(e);
            let y = [(c[0] / 0.25).fract(), (c[1] / 0.25).fract()];
            assert_eq!(mesh.phases()[e], cfg.geometry.phase_at(y));
        }
        assert!((mesh.area() - 1.0).abs() < 1e-12);
    }
}
