use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::Mesh;

/// Compressed sparse row structure with sorted column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from per-row column lists (duplicates allowed).
    pub fn from_rows(cols: usize, mut rows: Vec<Vec<usize>>) -> Pattern {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Pattern {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Storage position of entry `(row, col)`, if it is part of the pattern.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].binary_search(&col).ok().map(|p| lo + p)
    }
}

/// Nodal P1 space with `components` unknowns per node, numbered `node * components + i`.
#[derive(Clone, Debug)]
pub struct Space {
    components: usize,
    pattern: Arc<Pattern>,
    /// Per element, storage positions of the `(3c) x (3c)` local matrix entries.
    slots: Vec<usize>,
}

impl Space {
    pub fn scalar(mesh: &Mesh) -> Space {
        Space::new(mesh, 1)
    }

    pub fn vector(mesh: &Mesh) -> Space {
        Space::new(mesh, 2)
    }

    fn new(mesh: &Mesh, components: usize) -> Space {
        let c = components;
        let ndof = mesh.node_count() * c;
        let mut rows = vec![Vec::new(); ndof];
        for t in mesh.triangles() {
            for &a in t {
                for i in 0..c {
                    for &b in t {
                        for j in 0..c {
                            rows[a * c + i].push(b * c + j);
                        }
                    }
                }
            }
        }
        let pattern = Pattern::from_rows(ndof, rows);
        let local = 3 * c;
        let mut slots = Vec::with_capacity(mesh.triangle_count() * local * local);
        for t in mesh.triangles() {
            for a in 0..3 {
                for i in 0..c {
                    for b in 0..3 {
                        for j in 0..c {
                            let pos = pattern
                                .find(t[a] * c + i, t[b] * c + j)
                                .expect("element entry present in pattern");
                            slots.push(pos);
                        }
                    }
                }
            }
        }
        Space {
            components,
            pattern: Arc::new(pattern),
            slots,
        }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn ndof(&self) -> usize {
        self.pattern.rows()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn zero_matrix(&self) -> CsrMatrix {
        CsrMatrix::zeros(self.pattern.clone())
    }

    /// Adds a local element matrix (row-major, `3c x 3c`).
    #[inline]
    pub(crate) fn scatter(&self, m: &mut CsrMatrix, element: usize, local: &[f64]) {
        let n = 9 * self.components * self.components;
        let slots = &self.slots[element * n..(element + 1) * n];
        for (s, v) in slots.iter().zip(local) {
            m.values[*s] += v;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> CsrMatrix {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn from_parts(pattern: Arc<Pattern>, values: Vec<f64>) -> CsrMatrix {
        assert_eq!(pattern.nnz(), values.len(), "value count must match the pattern");
        CsrMatrix { pattern, values }
    }

    /// Builds a matrix from a dense row-major array, keeping nonzero entries.
    pub fn from_dense(rows: &[&[f64]]) -> CsrMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut lists = Vec::with_capacity(rows.len());
        let mut values = Vec::new();
        for r in rows {
            let mut l = Vec::new();
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    l.push(j);
                    values.push(v);
                }
            }
            lists.push(l);
        }
        CsrMatrix {
            pattern: Arc::new(Pattern::from_rows(cols, lists)),
            values,
        }
    }

    pub fn identity(n: usize) -> CsrMatrix {
        let rows = (0..n).map(|i| vec![i]).collect();
        CsrMatrix {
            pattern: Arc::new(Pattern::from_rows(n, rows)),
            values: vec![1.0; n],
        }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn rows(&self) -> usize {
        self.pattern.rows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |p| self.values[p])
    }

    /// `y = A x`
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in rp[r]..rp[r + 1] {
                acc += self.values[p] * x[ci[p]];
            }
            *out = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        self.mul_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows()).map(|r| self.get(r, r)).collect()
    }

    /// `self += s * other` for matrices sharing a pattern.
    pub fn add_scaled(&mut self, s: f64, other: &CsrMatrix) {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "matrices must share a sparsity pattern"
        );
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ| / max |A|`
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows() {
            for p in self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1] {
                let c = self.pattern.col_idx[p];
                worst = worst.max((self.values[p] - self.get(c, r)).abs());
            }
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Row-major dense copy, for small matrices in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.pattern.cols()]; self.rows()];
        for (r, row) in out.iter_mut().enumerate() {
            for p in self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1] {
                row[self.pattern.col_idx[p]] = self.values[p];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_and_product() {
        let a = CsrMatrix::from_dense(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        assert_eq!(a.pattern().nnz(), 5);
        assert_eq!(a.mul(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 3.0]);
        assert_eq!(a.diagonal(), vec![2.0, 2.0, 3.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.to_dense()[0], vec![2.0, 1.0, 0.0]);
    }
}
