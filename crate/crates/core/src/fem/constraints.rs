use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::sparse::{CsrMatrix, Pattern};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::mesh::Mesh;

/// Role of a degree of freedom after constraints are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// Unknown with the given index in the reduced system; several full dofs may share one.
    Free(usize),
    /// Value prescribed from outside.
    Fixed,
}

/// Maps full nodal dofs to reduced unknowns: Dirichlet values, periodic identification or none.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraints {
    components: usize,
    slots: Vec<Slot>,
    free: usize,
}

impl Constraints {
    pub fn none(mesh: &Mesh, components: usize) -> Constraints {
        let n = mesh.node_count() * components;
        Constraints {
            components,
            slots: (0..n).map(Slot::Free).collect(),
            free: n,
        }
    }

    /// Fixes every component of the listed nodes, which must lie on the boundary.
    pub fn fixed_nodes(mesh: &Mesh, components: usize, nodes: &[usize]) -> Result<Constraints> {
        let mut fixed = vec![false; mesh.node_count()];
        for &n in nodes {
            if n >= mesh.node_count() || !mesh.is_boundary(n) {
                return Err(Error::InvalidArgument(format!(
                    "node {n} is not a boundary node and cannot carry a boundary value"
                )));
            }
            fixed[n] = true;
        }
        let mut slots = Vec::with_capacity(mesh.node_count() * components);
        let mut free = 0;
        for f in fixed {
            for _ in 0..components {
                if f {
                    slots.push(Slot::Fixed);
                } else {
                    slots.push(Slot::Free(free));
                    free += 1;
                }
            }
        }
        Ok(Constraints {
            components,
            slots,
            free,
        })
    }

    /// Fixes the whole outer boundary.
    pub fn boundary(mesh: &Mesh, components: usize) -> Constraints {
        Constraints::fixed_nodes(mesh, components, mesh.boundary_nodes()).expect("boundary nodes")
    }

    /// Identifies nodes on opposite faces of a rectangular mesh and pins the corner node, which
    /// removes the constant null space. The mesh must match node-for-node across faces.
    pub fn periodic(mesh: &Mesh, components: usize) -> Result<Constraints> {
        let (lo, hi) = mesh.bounds();
        let size = [hi[0] - lo[0], hi[1] - lo[1]];
        let quantum = 1e-9 * size[0].max(size[1]);
        let fold = |v: f64, d: usize| -> f64 {
            if (v - hi[d]).abs() <= quantum {
                lo[d]
            } else {
                v
            }
        };
        let key = |p: [f64; 2]| -> (i64, i64) {
            (
                (fold(p[0], 0) / quantum).round() as i64,
                (fold(p[1], 1) / quantum).round() as i64,
            )
        };
        let mut master: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        let mut node_master = vec![0usize; mesh.node_count()];
        let mut images = vec![0usize; mesh.node_count()];
        for (n, p) in mesh.nodes().iter().enumerate() {
            let m = *master.entry(key(*p)).or_insert(n);
            node_master[n] = m;
            images[m] += 1;
        }
        for &n in mesh.boundary_nodes() {
            let p = mesh.nodes()[n];
            let on_face = |d: usize| (p[d] - lo[d]).abs() <= quantum || (p[d] - hi[d]).abs() <= quantum;
            let expected = if on_face(0) && on_face(1) {
                4
            } else {
                2
            };
            if images[node_master[n]] != expected {
                return Err(Error::Mesh(format!(
                    "boundary node {n} at ({}, {}) has no periodic partner",
                    p[0], p[1]
                )));
            }
        }
        let corner = *master
            .get(&key(lo))
            .ok_or_else(|| Error::Mesh("periodic mesh has no corner node".into()))?;

        let mut index = vec![usize::MAX; mesh.node_count()];
        let mut free = 0;
        for n in 0..mesh.node_count() {
            if node_master[n] == n && n != corner {
                index[n] = free;
                free += components;
            }
        }
        let mut slots = Vec::with_capacity(mesh.node_count() * components);
        for n in 0..mesh.node_count() {
            let m = node_master[n];
            for i in 0..components {
                if m == corner {
                    slots.push(Slot::Fixed);
                } else {
                    slots.push(Slot::Free(index[m] + i));
                }
            }
        }
        Ok(Constraints {
            components,
            slots,
            free,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn free_count(&self) -> usize {
        self.free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.slots[dof] == Slot::Fixed
    }

    /// Full-length vector from reduced unknowns and prescribed values.
    pub fn expand(&self, reduced: &[f64], fixed_values: &[f64]) -> Vec<f64> {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                Slot::Free(r) => reduced[*r],
                Slot::Fixed => fixed_values[i],
            })
            .collect()
    }

    /// Reduced vector gathered from a full-length one (first image wins for shared slots).
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.free];
        for (i, s) in self.slots.iter().enumerate() {
            if let Slot::Free(r) = s {
                if out[*r].is_nan() {
                    out[*r] = full[i];
                }
            }
        }
        out.iter_mut().for_each(|v| {
            if v.is_nan() {
                *v = 0.0
            }
        });
        out
    }

    /// Sum of a full-length load into reduced slots.
    pub fn fold_load(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free];
        for (i, s) in self.slots.iter().enumerate() {
            if let Slot::Free(r) = s {
                out[*r] += full[i];
            }
        }
        out
    }
}

/// Precomputed map from a full matrix pattern to the pattern of the constrained system.
#[derive(Clone, Debug)]
pub struct Reduction {
    constraints: Constraints,
    pattern: Arc<Pattern>,
    full_pattern: Arc<Pattern>,
    entry_map: Vec<usize>,
    /// (reduced row, full storage position, full column) for couplings to fixed dofs.
    fixed_coupling: Vec<(usize, usize, usize)>,
}

impl Reduction {
    pub fn new(full: &Arc<Pattern>, constraints: Constraints) -> Reduction {
        let slots = constraints.slots();
        let mut rows = vec![Vec::new(); constraints.free_count()];
        let mut fixed_coupling = Vec::new();
        let rp = full.row_ptr();
        let ci = full.col_idx();
        for r in 0..full.rows() {
            if let Slot::Free(rr) = slots[r] {
                for p in rp[r]..rp[r + 1] {
                    match slots[ci[p]] {
                        Slot::Free(cc) => rows[rr].push(cc),
                        Slot::Fixed => fixed_coupling.push((rr, p, ci[p])),
                    }
                }
            }
        }
        let pattern = Arc::new(Pattern::from_rows(constraints.free_count(), rows));
        let mut entry_map = vec![usize::MAX; full.nnz()];
        for r in 0..full.rows() {
            if let Slot::Free(rr) = slots[r] {
                for p in rp[r]..rp[r + 1] {
                    if let Slot::Free(cc) = slots[ci[p]] {
                        entry_map[p] = pattern.find(rr, cc).expect("reduced entry");
                    }
                }
            }
        }
        Reduction {
            constraints,
            pattern,
            full_pattern: full.clone(),
            entry_map,
            fixed_coupling,
        }
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    pub fn reduce_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        debug_assert_eq!(a.pattern().nnz(), self.full_pattern.nnz());
        let mut out = CsrMatrix::zeros(self.pattern.clone());
        let vals = out.values_mut();
        for (p, &m) in self.entry_map.iter().enumerate() {
            if m != usize::MAX {
                vals[m] += a.values()[p];
            }
        }
        out
    }

    /// Folds the load and moves the prescribed values to the right-hand side.
    pub fn reduce_rhs(&self, a: &CsrMatrix, b: &[f64], fixed_values: &[f64]) -> Vec<f64> {
        let mut out = self.constraints.fold_load(b);
        for &(r, p, c) in &self.fixed_coupling {
            out[r] -= a.values()[p] * fixed_values[c];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_macro_mesh, build_unit_cell_mesh, PhaseGeometry};

    #[test]
    fn interior_node_cannot_be_fixed() {
        let mesh = build_macro_mesh(0.25).unwrap();
        let interior = (0..mesh.node_count()).find(|&n| !mesh.is_boundary(n)).unwrap();
        assert!(Constraints::fixed_nodes(&mesh, 1, &[interior]).is_err());
    }

    #[test]
    fn periodic_folding_of_unit_cell() {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        let mesh = build_unit_cell_mesh(&g, 0.2).unwrap();
        let c = Constraints::periodic(&mesh, 2).unwrap();
        let boundary = mesh.boundary_nodes().len();
        // opposite faces collapse pairwise, the four corners become one pinned node
        let expected_nodes = mesh.node_count() - boundary / 2 - 2;
        assert_eq!(c.free_count(), 2 * expected_nodes);
    }
}
