//! Linear triangular meshes for the unit cell, the macroscopic domain and tiled
//! fine-scale domains.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tensor::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Matrix,
    Inclusion,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Matrix, Phase::Inclusion];

    pub fn index(self) -> usize {
        match self {
            Phase::Matrix => 0,
            Phase::Inclusion => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Matrix => "matrix",
            Phase::Inclusion => "inclusion",
        }
    }
}

impl core::str::FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(Phase::Matrix),
            "inclusion" => Ok(Phase::Inclusion),
            _ => Err(Error::Material(format!("unknown phase '{s}'"))),
        }
    }
}

/// Inclusion layout inside the unit cell `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseGeometry {
    /// Circular inclusion; the interface is a polygon with vertices on the circle.
    Disk { center: Vec2, radius: f64 },
    /// Inclusion band `lo <= y[axis] <= hi` spanning the cell in the other direction.
    Stripe { axis: usize, lo: f64, hi: f64 },
}

const SYMMETRY_TOL: f64 = 1e-12;

impl PhaseGeometry {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseGeometry::Disk { center, radius } => {
                if (center[0] - 0.5).abs() > SYMMETRY_TOL || (center[1] - 0.5).abs() > SYMMETRY_TOL
                {
                    return Err(Error::Geometry(format!(
                        "disk center ({}, {}) is not the cell center; the inclusion must be \
                         symmetric about both cell mid-lines",
                        center[0], center[1]
                    )));
                }
                if !(radius > 0.0 && radius < 0.5) {
                    return Err(Error::Geometry(format!(
                        "disk radius {radius} must lie strictly between 0 and 0.5"
                    )));
                }
            }
            PhaseGeometry::Stripe { axis, lo, hi } => {
                if axis > 1 {
                    return Err(Error::Geometry(format!("stripe axis {axis} must be 0 or 1")));
                }
                if !(0.0 < lo && lo < hi && hi < 1.0) {
                    return Err(Error::Geometry(format!(
                        "stripe bounds [{lo}, {hi}] must satisfy 0 < lo < hi < 1"
                    )));
                }
                if (lo + hi - 1.0).abs() > SYMMETRY_TOL {
                    return Err(Error::Geometry(format!(
                        "stripe [{lo}, {hi}] is not centered; the inclusion must be symmetric \
                         about both cell mid-lines"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Phase of a point of the unit cell. Points on the interface count as inclusion.
    pub fn phase_at(&self, y: Vec2) -> Phase {
        let inside = match *self {
            PhaseGeometry::Disk { center, radius } => {
                (y[0] - center[0]).hypot(y[1] - center[1]) <= radius * (1.0 + 1e-12)
            }
            PhaseGeometry::Stripe { axis, lo, hi } => {
                y[axis] >= lo - 1e-12 && y[axis] <= hi + 1e-12
            }
        };
        if inside {
            Phase::Inclusion
        } else {
            Phase::Matrix
        }
    }
}

/// Area and gradients of the barycentric basis functions of one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [Vec2; 3],
}

#[derive(Clone, Debug)]
struct Locator {
    lower: Vec2,
    cell: Vec2,
    dims: [usize; 2],
    start: Vec<u32>,
    items: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    phases: Vec<Phase>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    geometry: Vec<ElementGeometry>,
    h: f64,
    lower: Vec2,
    upper: Vec2,
    locator: Locator,
}

impl Mesh {
    /// Builds a mesh and checks its invariants: positive triangle areas, every edge shared
    /// by at most two triangles, one phase tag per triangle.
    pub fn new(nodes: Vec<Vec2>, triangles: Vec<[usize; 3]>, phases: Vec<Phase>) -> Result<Mesh> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        if phases.len() != triangles.len() {
            return Err(Error::Mesh(format!(
                "{} phase tags for {} triangles",
                phases.len(),
                triangles.len()
            )));
        }
        let mut geometry = Vec::with_capacity(triangles.len());
        let mut h: f64 = 0.0;
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&n| n >= nodes.len()) {
                return Err(Error::Mesh(format!("triangle {e} references a missing node")));
            }
            let g = element_geometry(&nodes, tri);
            if !(g.area > 0.0) {
                return Err(Error::Mesh(format!(
                    "triangle {e} has non-positive signed area {}",
                    g.area
                )));
            }
            geometry.push(g);
            for a in 0..3 {
                let p = nodes[tri[a]];
                let q = nodes[tri[(a + 1) % 3]];
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }

        let mut edges: BTreeMap<(usize, usize), u8> = BTreeMap::new();
        for tri in &triangles {
            for a in 0..3 {
                let (i, j) = (tri[a], tri[(a + 1) % 3]);
                *edges.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
        let mut is_boundary = vec![false; nodes.len()];
        for (&(i, j), &count) in &edges {
            if count > 2 {
                return Err(Error::Mesh(format!("edge ({i}, {j}) is shared by {count} triangles")));
            }
            if count == 1 {
                is_boundary[i] = true;
                is_boundary[j] = true;
            }
        }
        let mut used = vec![false; nodes.len()];
        for tri in &triangles {
            for &n in tri {
                used[n] = true;
            }
        }
        if let Some(n) = used.iter().position(|u| !u) {
            return Err(Error::Mesh(format!("node {n} belongs to no triangle")));
        }
        let boundary_nodes = (0..nodes.len()).filter(|&n| is_boundary[n]).collect();

        let mut lower = [f64::INFINITY; 2];
        let mut upper = [f64::NEG_INFINITY; 2];
        for p in &nodes {
            for d in 0..2 {
                lower[d] = lower[d].min(p[d]);
                upper[d] = upper[d].max(p[d]);
            }
        }
        let locator = build_locator(&nodes, &triangles, lower, upper);
        Ok(Mesh {
            nodes,
            triangles,
            phases,
            boundary_nodes,
            is_boundary,
            geometry,
            h,
            lower,
            upper,
            locator,
        })
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Sorted indices of nodes on the outer boundary.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn geometry(&self, element: usize) -> &ElementGeometry {
        &self.geometry[element]
    }

    /// Largest element edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        (self.lower, self.upper)
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn phase_area(&self, phase: Phase) -> f64 {
        self.geometry
            .iter()
            .zip(&self.phases)
            .filter(|(_, p)| **p == phase)
            .map(|(g, _)| g.area)
            .sum()
    }

    pub fn centroid(&self, element: usize) -> Vec2 {
        let t = self.triangles[element];
        let mut c = [0.0; 2];
        for &n in &t {
            c[0] += self.nodes[n][0] / 3.0;
            c[1] += self.nodes[n][1] / 3.0;
        }
        c
    }

    /// Position of a point given by barycentric coordinates in a triangle.
    pub fn point(&self, element: usize, bary: [f64; 3]) -> Vec2 {
        let t = self.triangles[element];
        let mut p = [0.0; 2];
        for a in 0..3 {
            p[0] += bary[a] * self.nodes[t[a]][0];
            p[1] += bary[a] * self.nodes[t[a]][1];
        }
        p
    }

    /// Interpolates a nodal scalar field at barycentric coordinates of a triangle.
    #[inline]
    pub fn interpolate(&self, field: &[f64], element: usize, bary: [f64; 3]) -> f64 {
        let t = self.triangles[element];
        bary[0] * field[t[0]] + bary[1] * field[t[1]] + bary[2] * field[t[2]]
    }

    /// Interpolates an interleaved two-component nodal field.
    #[inline]
    pub fn interpolate_vector(&self, field: &[f64], element: usize, bary: [f64; 3]) -> Vec2 {
        let t = self.triangles[element];
        let mut v = [0.0; 2];
        for a in 0..3 {
            v[0] += bary[a] * field[2 * t[a]];
            v[1] += bary[a] * field[2 * t[a] + 1];
        }
        v
    }

    /// Constant gradient of a nodal scalar field on a triangle.
    #[inline]
    pub fn gradient(&self, field: &[f64], element: usize) -> Vec2 {
        let t = self.triangles[element];
        let g = &self.geometry[element].grads;
        let mut out = [0.0; 2];
        for a in 0..3 {
            out[0] += field[t[a]] * g[a][0];
            out[1] += field[t[a]] * g[a][1];
        }
        out
    }

    /// Constant gradient `[i][j] = ∂u_i/∂x_j` of an interleaved vector field on a triangle.
    #[inline]
    pub fn vector_gradient(&self, field: &[f64], element: usize) -> [[f64; 2]; 2] {
        let t = self.triangles[element];
        let g = &self.geometry[element].grads;
        let mut out = [[0.0; 2]; 2];
        for a in 0..3 {
            for i in 0..2 {
                let u = field[2 * t[a] + i];
                out[i][0] += u * g[a][0];
                out[i][1] += u * g[a][1];
            }
        }
        out
    }

    /// Finds a triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate_point(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        let loc = &self.locator;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        let bucket = |d: usize| -> usize {
            let f = ((p[d] - loc.lower[d]) / loc.cell[d]).floor();
            if f < 0.0 {
                0
            } else {
                (f as usize).min(loc.dims[d] - 1)
            }
        };
        let (bx, by) = (bucket(0), bucket(1));
        let b = by * loc.dims[0] + bx;
        for &e in &loc.items[loc.start[b] as usize..loc.start[b + 1] as usize] {
            let e = e as usize;
            let bary = self.barycentric(e, p);
            let m = bary[0].min(bary[1]).min(bary[2]);
            if best.is_none_or(|(_, _, bm)| m > bm) {
                best = Some((e, bary, m));
                if m >= 0.0 {
                    break;
                }
            }
        }
        match best {
            Some((e, mut bary, m)) if m >= -1e-9 => {
                if m < 0.0 {
                    for v in bary.iter_mut() {
                        *v = v.max(0.0);
                    }
                    let s = bary[0] + bary[1] + bary[2];
                    bary = [bary[0] / s, bary[1] / s, 1.0 - bary[0] / s - bary[1] / s];
                }
                Ok((e, bary))
            }
            _ => Err(Error::PointOutside { x: p[0], y: p[1] }),
        }
    }

    /// Barycentric coordinates of `p` with respect to a triangle (may be negative).
    pub fn barycentric(&self, element: usize, p: Vec2) -> [f64; 3] {
        let t = self.triangles[element];
        let g = &self.geometry[element].grads;
        let x0 = self.nodes[t[0]];
        let d = [p[0] - x0[0], p[1] - x0[1]];
        let l1 = g[1][0] * d[0] + g[1][1] * d[1];
        let l2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }

    /// For each node, the triangles that contain it.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (e, t) in self.triangles.iter().enumerate() {
            for &n in t {
                out[n].push(e);
            }
        }
        out
    }

    /// Lumped nodal weights `∫ φ_n`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for (t, g) in self.triangles.iter().zip(&self.geometry) {
            for &n in t {
                m[n] += g.area / 3.0;
            }
        }
        m
    }
}

fn element_geometry(nodes: &[Vec2], tri: &[usize; 3]) -> ElementGeometry {
    let [p0, p1, p2] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    ElementGeometry {
        area: 0.5 * det,
        grads,
    }
}

fn build_locator(nodes: &[Vec2], triangles: &[[usize; 3]], lower: Vec2, upper: Vec2) -> Locator {
    let side = (triangles.len() as f64).sqrt().ceil().max(1.0) as usize;
    let dims = [side, side];
    let cell = [
        ((upper[0] - lower[0]) / side as f64).max(f64::MIN_POSITIVE),
        ((upper[1] - lower[1]) / side as f64).max(f64::MIN_POSITIVE),
    ];
    let nb = dims[0] * dims[1];
    let range = |e: usize, d: usize| -> (usize, usize) {
        let t = triangles[e];
        let lo = t.iter().map(|&n| nodes[n][d]).fold(f64::INFINITY, f64::min);
        let hi = t.iter().map(|&n| nodes[n][d]).fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-9 * cell[d];
        let a = (((lo - slack - lower[d]) / cell[d]).floor().max(0.0) as usize).min(dims[d] - 1);
        let b = (((hi + slack - lower[d]) / cell[d]).floor().max(0.0) as usize).min(dims[d] - 1);
        (a, b)
    };
    let mut counts = vec![0u32; nb + 1];
    for e in 0..triangles.len() {
        let (x0, x1) = range(e, 0);
        let (y0, y1) = range(e, 1);
        for by in y0..=y1 {
            for bx in x0..=x1 {
                counts[by * dims[0] + bx + 1] += 1;
            }
        }
    }
    for b in 0..nb {
        counts[b + 1] += counts[b];
    }
    let start = counts.clone();
    let mut fill = counts;
    let mut items = vec![0u32; start[nb] as usize];
    for e in 0..triangles.len() {
        let (x0, x1) = range(e, 0);
        let (y0, y1) = range(e, 1);
        for by in y0..=y1 {
            for bx in x0..=x1 {
                let b = by * dims[0] + bx;
                items[fill[b] as usize] = e as u32;
                fill[b] += 1;
            }
        }
    }
    Locator {
        lower,
        cell,
        dims,
        start,
        items,
    }
}

/// Deduplicates nodes that coincide up to a small tolerance.
struct NodeMerger {
    nodes: Vec<Vec2>,
    index: BTreeMap<(i64, i64), usize>,
    quantum: f64,
}

impl NodeMerger {
    fn new(quantum: f64) -> Self {
        NodeMerger {
            nodes: Vec::new(),
            index: BTreeMap::new(),
            quantum,
        }
    }

    fn insert(&mut self, p: Vec2) -> usize {
        let key = ((p[0] / self.quantum).round() as i64, (p[1] / self.quantum).round() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&n) = self.index.get(&(key.0 + dx, key.1 + dy)) {
                    let q = self.nodes[n];
                    if (p[0] - q[0]).abs() <= self.quantum && (p[1] - q[1]).abs() <= self.quantum {
                        return n;
                    }
                }
            }
        }
        let n = self.nodes.len();
        self.nodes.push(p);
        self.index.insert(key, n);
        n
    }
}

/// Accumulates quads, each split into four triangles around its center.
struct QuadBuilder {
    merger: NodeMerger,
    triangles: Vec<[usize; 3]>,
    phases: Vec<Phase>,
}

impl QuadBuilder {
    fn new() -> Self {
        QuadBuilder {
            merger: NodeMerger::new(1e-10),
            triangles: Vec::new(),
            phases: Vec::new(),
        }
    }

    /// Adds a counterclockwise quad.
    fn quad(&mut self, q: [Vec2; 4], phase: Phase) {
        let c = [
            0.25 * (q[0][0] + q[1][0] + q[2][0] + q[3][0]),
            0.25 * (q[0][1] + q[1][1] + q[2][1] + q[3][1]),
        ];
        let ids = q.map(|p| self.merger.insert(p));
        let center = self.merger.insert(c);
        for a in 0..4 {
            self.triangles.push([ids[a], ids[(a + 1) % 4], center]);
            self.phases.push(phase);
        }
    }

    /// Removes round-off from coordinates that should lie exactly on the cell boundary or
    /// on the mid-lines, then builds the mesh.
    fn finish(mut self) -> Result<Mesh> {
        for p in self.merger.nodes.iter_mut() {
            for v in p.iter_mut() {
                for target in [0.0, 0.5, 1.0] {
                    if (*v - target).abs() < 1e-13 {
                        *v = target;
                    }
                }
            }
        }
        Mesh::new(self.merger.nodes, self.triangles, self.phases)
    }
}

/// Structured, reflection-symmetric, interface-conforming mesh of the unit cell.
/// The realized element size is at most `1.5 * target_h`.
pub fn build_unit_cell_mesh(geometry: &PhaseGeometry, target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::Mesh(format!("target element size {target_h} must be positive")));
    }
    geometry.validate()?;
    let mut spacing = 1.45 * target_h;
    for _ in 0..60 {
        let mesh = match *geometry {
            PhaseGeometry::Disk { center, radius } => disk_cell(center, radius, spacing)?,
            PhaseGeometry::Stripe { axis, lo, hi } => stripe_cell(axis, lo, hi, spacing)?,
        };
        if mesh.h() <= 1.5 * target_h {
            return Ok(mesh);
        }
        spacing *= 0.9;
    }
    Err(Error::Mesh(format!("could not reach element size {target_h}")))
}

fn divisions(length: f64, spacing: f64) -> usize {
    ((length / spacing).ceil() as usize).max(1)
}

fn stripe_cell(axis: usize, lo: f64, hi: f64, spacing: f64) -> Result<Mesh> {
    let breaks = [0.0, lo, hi, 1.0];
    let mut along = Vec::new();
    for w in breaks.windows(2) {
        let n = divisions(w[1] - w[0], spacing);
        for i in 0..n {
            along.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    along.push(1.0);
    let n = divisions(1.0, spacing);
    let across: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut b = QuadBuilder::new();
    for i in 0..along.len() - 1 {
        let mid = 0.5 * (along[i] + along[i + 1]);
        let phase = if mid > lo && mid < hi {
            Phase::Inclusion
        } else {
            Phase::Matrix
        };
        for j in 0..across.len() - 1 {
            let (a0, a1, c0, c1) = (along[i], along[i + 1], across[j], across[j + 1]);
            let q = if axis == 0 {
                [[a0, c0], [a1, c0], [a1, c1], [a0, c1]]
            } else {
                [[c0, a0], [c1, a0], [c1, a1], [c0, a1]]
            };
            b.quad(q, phase);
        }
    }
    b.finish()
}

fn disk_cell(center: Vec2, radius: f64, spacing: f64) -> Result<Mesh> {
    let core = 0.5 * radius;
    let k = divisions(0.8, spacing).max(2);
    let ring = divisions(radius - core, spacing);
    let outer = divisions(0.5 * core::f64::consts::SQRT_2 - radius, 1.2 * spacing);
    let s = |j: usize| -1.0 + 2.0 * j as f64 / k as f64;
    let mut b = QuadBuilder::new();

    for j in 0..k {
        for l in 0..k {
            let p = |u: f64, v: f64| [center[0] + core * u, center[1] + core * v];
            b.quad(
                [p(s(j), s(l)), p(s(j + 1), s(l)), p(s(j + 1), s(l + 1)), p(s(j), s(l + 1))],
                Phase::Inclusion,
            );
        }
    }

    // Each of the four patches is the +x patch rotated by a multiple of 90 degrees.
    for rot in 0..4 {
        let rotate = |p: Vec2| -> Vec2 {
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            let (rx, ry) = match rot {
                0 => (dx, dy),
                1 => (-dy, dx),
                2 => (-dx, -dy),
                _ => (dy, -dx),
            };
            [center[0] + rx, center[1] + ry]
        };
        let inner_pt = |t: f64| [center[0] + core, center[1] + core * t];
        let circle_pt = |t: f64| {
            let th = t * core::f64::consts::FRAC_PI_4;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        };
        let outer_pt = |t: f64| [center[0] + 0.5, center[1] + 0.5 * t];
        let lerp = |a: Vec2, c: Vec2, w: f64| [a[0] + (c[0] - a[0]) * w, a[1] + (c[1] - a[1]) * w];

        let ring_pt = |i: usize, j: usize| {
            let t = s(j);
            rotate(lerp(inner_pt(t), circle_pt(t), i as f64 / ring as f64))
        };
        let outer_layer = |i: usize, j: usize| {
            let t = s(j);
            rotate(lerp(circle_pt(t), outer_pt(t), i as f64 / outer as f64))
        };
        for i in 0..ring {
            for j in 0..k {
                b.quad(
                    [ring_pt(i, j), ring_pt(i + 1, j), ring_pt(i + 1, j + 1), ring_pt(i, j + 1)],
                    Phase::Inclusion,
                );
            }
        }
        for i in 0..outer {
            for j in 0..k {
                b.quad(
                    [
                        outer_layer(i, j),
                        outer_layer(i + 1, j),
                        outer_layer(i + 1, j + 1),
                        outer_layer(i, j + 1),
                    ],
                    Phase::Matrix,
                );
            }
        }
    }
    b.finish()
}

/// Uniform mesh of the rectangle `[lower, upper]` with `nx * ny` squares, two triangles each.
pub fn build_rectangle_mesh(lower: Vec2, upper: Vec2, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 || !(upper[0] > lower[0] && upper[1] > lower[1]) {
        return Err(Error::Mesh("degenerate rectangle mesh request".into()));
    }
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                lower[0] + (upper[0] - lower[0]) * i as f64 / nx as f64,
                lower[1] + (upper[1] - lower[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let phases = vec![Phase::Matrix; triangles.len()];
    Mesh::new(nodes, triangles, phases)
}

/// Single-phase mesh of the unit square with `ceil(1/target_h)` squares per side.
pub fn build_macro_mesh(target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::Mesh(format!("target element size {target_h} must be positive")));
    }
    let n = ((1.0 / target_h) - 1e-9).ceil().max(1.0) as usize;
    build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n)
}

/// Tiles the unit square with `cells_per_side²` scaled copies of a unit-cell mesh.
pub fn tile_unit_cell(cell: &Mesh, cells_per_side: usize) -> Result<Mesh> {
    if cells_per_side == 0 {
        return Err(Error::Mesh("at least one cell per side is required".into()));
    }
    let scale = 1.0 / cells_per_side as f64;
    let mut merger = NodeMerger::new(1e-10 * scale);
    let mut triangles = Vec::with_capacity(cell.triangle_count() * cells_per_side * cells_per_side);
    let mut phases = Vec::with_capacity(triangles.capacity());
    let mut local = vec![0usize; cell.node_count()];
    for cj in 0..cells_per_side {
        for ci in 0..cells_per_side {
            for (n, p) in cell.nodes().iter().enumerate() {
                local[n] = merger.insert([(ci as f64 + p[0]) * scale, (cj as f64 + p[1]) * scale]);
            }
            for (t, &ph) in cell.triangles().iter().zip(cell.phases()) {
                triangles.push([local[t[0]], local[t[1]], local[t[2]]]);
                phases.push(ph);
            }
        }
    }
    Mesh::new(merger.nodes, triangles, phases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has_node(mesh: &Mesh, p: Vec2) -> bool {
        mesh.nodes()
            .iter()
            .any(|q| (q[0] - p[0]).abs() <= 1e-12 && (q[1] - p[1]).abs() <= 1e-12)
    }

    #[test]
    fn disk_cell_is_symmetric_and_conforming() {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        let mesh = build_unit_cell_mesh(&g, 0.05).unwrap();
        assert!(mesh.h() <= 0.075);
        assert!((mesh.area() - 1.0).abs() < 1e-12);
        for p in mesh.nodes() {
            assert!(has_node(&mesh, [1.0 - p[0], p[1]]));
            assert!(has_node(&mesh, [p[0], 1.0 - p[1]]));
        }
        for e in 0..mesh.triangle_count() {
            let expected = g.phase_at(mesh.centroid(e));
            assert_eq!(mesh.phases()[e], expected, "element {e}");
        }
        let f = mesh.phase_area(Phase::Inclusion);
        assert!(f > 0.18 && f < 0.1964);
    }

    #[test]
    fn stripe_cell_elements_stay_on_one_side() {
        let g = PhaseGeometry::Stripe {
            axis: 0,
            lo: 0.25,
            hi: 0.75,
        };
        let mesh = build_unit_cell_mesh(&g, 0.1).unwrap();
        for (e, t) in mesh.triangles().iter().enumerate() {
            let inside = |y: f64| (0.25 - 1e-12..=0.75 + 1e-12).contains(&y);
            let outside = |y: f64| y <= 0.25 + 1e-12 || y >= 0.75 - 1e-12;
            let xs: Vec<f64> = t.iter().map(|&n| mesh.nodes()[n][0]).collect();
            match mesh.phases()[e] {
                Phase::Inclusion => assert!(xs.iter().all(|&x| inside(x))),
                Phase::Matrix => assert!(xs.iter().all(|&x| outside(x))),
            }
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        assert!(build_unit_cell_mesh(&g, 0.0).is_err());
        let off = PhaseGeometry::Disk {
            center: [0.4, 0.5],
            radius: 0.25,
        };
        assert!(matches!(build_unit_cell_mesh(&off, 0.1), Err(Error::Geometry(_))));
        let band = PhaseGeometry::Stripe {
            axis: 0,
            lo: 0.2,
            hi: 0.7,
        };
        assert!(matches!(band.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn macro_mesh_counts() {
        let m = build_macro_mesh(0.02).unwrap();
        assert_eq!(m.triangle_count(), 5000);
        assert_eq!(m.node_count(), 2601);
        assert_eq!(build_macro_mesh(1.0).unwrap().triangle_count(), 2);
        let a = build_macro_mesh(0.1).unwrap().triangle_count();
        let b = build_macro_mesh(0.05).unwrap().triangle_count();
        assert_eq!(b, 4 * a);
    }

    #[test]
    fn locate_vertex_and_centroid() {
        let m = build_macro_mesh(0.25).unwrap();
        let (e, bary) = m.locate_point(m.centroid(7)).unwrap();
        assert_eq!(e, 7);
        for b in bary {
            assert!((b - 1.0 / 3.0).abs() < 1e-12);
        }
        let v = m.nodes()[m.triangles()[3][1]];
        let (e, bary) = m.locate_point(v).unwrap();
        assert!(m.triangles()[e].iter().any(|&n| m.nodes()[n] == v));
        assert!(bary.iter().any(|&b| (b - 1.0).abs() < 1e-12));
        assert!(m.locate_point([1.5, 0.5]).is_err());
    }

    #[test]
    fn tiling_merges_shared_nodes() {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        let cell = build_unit_cell_mesh(&g, 0.2).unwrap();
        let tiled = tile_unit_cell(&cell, 3).unwrap();
        assert_eq!(tiled.triangle_count(), 9 * cell.triangle_count());
        for &n in tiled.boundary_nodes() {
            let p = tiled.nodes()[n];
            assert!(p[0] == 0.0 || p[1] == 0.0 || (p[0] - 1.0).abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12);
        }
        assert!((tiled.area() - 1.0).abs() < 1e-12);
    }
}
