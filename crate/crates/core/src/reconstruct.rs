//! Gradient recovery and the first- and second-order multiscale reconstructions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::homog::{blend_scalar, blend_vector, CellPoint, TemperatureTable};
use crate::macroscale::Snapshot;
use crate::mesh::Mesh;
use crate::tensor::{Mat2, Vec2};

/// Nodal gradient: area-weighted mean of the constant gradients of the adjacent elements.
pub fn recover_gradient(mesh: &Mesh, field: &[f64]) -> Vec<Vec2> {
    let mut acc = vec![[0.0; 2]; mesh.node_count()];
    let mut weight = vec![0.0; mesh.node_count()];
    for (e, t) in mesh.triangles().iter().enumerate() {
        let a = mesh.geometry(e).area;
        let g = mesh.gradient(field, e);
        for &n in t {
            acc[n][0] += a * g[0];
            acc[n][1] += a * g[1];
            weight[n] += a;
        }
    }
    for (g, w) in acc.iter_mut().zip(weight) {
        g[0] /= w;
        g[1] /= w;
    }
    acc
}

/// Recovered gradient `[i][j] = ∂u_i/∂x_j` of an interleaved vector field.
pub fn recover_vector_gradient(mesh: &Mesh, field: &[f64]) -> Vec<Mat2> {
    let mut acc = vec![Mat2::ZERO; mesh.node_count()];
    let mut weight = vec![0.0; mesh.node_count()];
    for (e, t) in mesh.triangles().iter().enumerate() {
        let a = mesh.geometry(e).area;
        let g = Mat2(mesh.vector_gradient(field, e));
        for &n in t {
            acc[n] += g * a;
            weight[n] += a;
        }
    }
    for (g, w) in acc.iter_mut().zip(weight) {
        *g = *g * (1.0 / w);
    }
    acc
}

/// Second derivatives by recovering the gradient of the recovered gradient, symmetrized.
pub fn recover_hessian(mesh: &Mesh, field: &[f64]) -> Vec<Mat2> {
    let g = recover_gradient(mesh, field);
    let flat: Vec<f64> = g.iter().flat_map(|v| [v[0], v[1]]).collect();
    recover_vector_gradient(mesh, &flat)
        .into_iter()
        .map(|h| (h + h.transpose()) * 0.5)
        .collect()
}

/// Backward-difference time derivatives at a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDerivatives {
    /// `(T^m − T^{m−1}) / Δt`
    pub temperature_rate: Vec<f64>,
    /// `(U^m − 2U^{m−1} + U^{m−2}) / Δt²`, interleaved.
    pub acceleration: Vec<f64>,
    /// Recovered gradient of `(U^m − U^{m−1}) / Δt`.
    pub velocity_gradient: Vec<Mat2>,
}

pub fn time_derivatives(mesh: &Mesh, snap: &Snapshot, dt: f64) -> TimeDerivatives {
    let temperature_rate = snap
        .temperature
        .iter()
        .zip(&snap.temperature_prev)
        .map(|(a, b)| (a - b) / dt)
        .collect();
    let acceleration = snap
        .displacement
        .iter()
        .zip(&snap.displacement_prev)
        .zip(&snap.displacement_prev2)
        .map(|((u, p), q)| (u - 2.0 * p + q) / (dt * dt))
        .collect();
    let velocity: Vec<f64> = snap
        .displacement
        .iter()
        .zip(&snap.displacement_prev)
        .map(|(u, p)| (u - p) / dt)
        .collect();
    TimeDerivatives {
        temperature_rate,
        acceleration,
        velocity_gradient: recover_vector_gradient(mesh, &velocity),
    }
}

/// Nodal macroscopic fields and all derivatives the reconstructions contract with.
#[derive(Clone, Debug)]
pub struct MacroFields {
    pub temperature: Vec<f64>,
    pub potential: Vec<f64>,
    pub displacement: Vec<f64>,
    pub grad_temperature: Vec<Vec2>,
    pub grad_potential: Vec<Vec2>,
    pub grad_displacement: Vec<Mat2>,
    pub hess_temperature: Vec<Mat2>,
    pub hess_potential: Vec<Mat2>,
    /// Per node, the Hessian of each displacement component.
    pub hess_displacement: Vec<[Mat2; 2]>,
    pub time: TimeDerivatives,
}

impl MacroFields {
    pub fn new(mesh: &Mesh, snap: &Snapshot, dt: f64) -> Self {
        let component = |i: usize| -> Vec<f64> { snap.displacement.iter().skip(i).step_by(2).copied().collect() };
        let h0 = recover_hessian(mesh, &component(0));
        let h1 = recover_hessian(mesh, &component(1));
        MacroFields {
            temperature: snap.temperature.clone(),
            potential: snap.potential.clone(),
            displacement: snap.displacement.clone(),
            grad_temperature: recover_gradient(mesh, &snap.temperature),
            grad_potential: recover_gradient(mesh, &snap.potential),
            grad_displacement: recover_vector_gradient(mesh, &snap.displacement),
            hess_temperature: recover_hessian(mesh, &snap.temperature),
            hess_potential: recover_hessian(mesh, &snap.potential),
            hess_displacement: h0.into_iter().zip(h1).map(|(a, b)| [a, b]).collect(),
            time: time_derivatives(mesh, snap, dt),
        }
    }
}

/// Temperature, potential and interleaved displacement on the evaluation points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldSet {
    pub temperature: Vec<f64>,
    pub potential: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl FieldSet {
    fn with_len(n: usize) -> Self {
        FieldSet {
            temperature: vec![0.0; n],
            potential: vec![0.0; n],
            displacement: vec![0.0; 2 * n],
        }
    }
}

/// Which field a diagnostic term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Temperature,
    Potential,
    Displacement,
}

/// One second-order corrector contribution, already multiplied by `ε²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub name: &'static str,
    pub field: FieldKind,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub homogenized: FieldSet,
    pub first_order: FieldSet,
    pub second_order: FieldSet,
    /// Empty unless requested.
    pub terms: Vec<Term>,
    pub clamped_lookups: usize,
}

const TERM_NAMES: [(&str, FieldKind); 16] = [
    ("Q", FieldKind::Temperature),
    ("M2", FieldKind::Temperature),
    ("R", FieldKind::Temperature),
    ("O", FieldKind::Temperature),
    ("G", FieldKind::Temperature),
    ("J", FieldKind::Temperature),
    ("H2", FieldKind::Potential),
    ("Z", FieldKind::Potential),
    ("W", FieldKind::Potential),
    ("N2", FieldKind::Displacement),
    ("F", FieldKind::Displacement),
    ("X", FieldKind::Displacement),
    ("A", FieldKind::Displacement),
    ("B", FieldKind::Displacement),
    ("C", FieldKind::Displacement),
    ("D", FieldKind::Displacement),
];

/// Evaluates reconstructions at fixed points for any snapshot of a macroscopic trajectory.
pub struct Evaluator<'a> {
    table: &'a TemperatureTable,
    macro_mesh: &'a Mesh,
    epsilon: f64,
    macro_points: Vec<(usize, [f64; 3])>,
    cell_points: Vec<CellPoint>,
}

impl<'a> Evaluator<'a> {
    pub fn new(table: &'a TemperatureTable, macro_mesh: &'a Mesh, points: &[Vec2], epsilon: f64) -> Result<Self> {
        let macro_points = points.iter().map(|&p| macro_mesh.locate_point(p)).collect::<Result<_>>()?;
        let cell_points = points
            .iter()
            .map(|&p| table.cell_point(p, epsilon))
            .collect::<Result<_>>()?;
        Ok(Evaluator {
            table,
            macro_mesh,
            epsilon,
            macro_points,
            cell_points,
        })
    }

    pub fn len(&self) -> usize {
        self.macro_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.macro_points.is_empty()
    }

    /// Homogenized, first-order and (when the table has them) second-order fields.
    pub fn evaluate(&self, snap: &Snapshot, dt: f64, keep_terms: bool) -> Reconstruction {
        let fields = MacroFields::new(self.macro_mesh, snap, dt);
        self.evaluate_fields(&fields, keep_terms)
    }

    pub fn evaluate_fields(&self, f: &MacroFields, keep_terms: bool) -> Reconstruction {
        let n = self.len();
        let mesh = self.macro_mesh;
        let cell = &self.table.mesh;
        let eps = self.epsilon;
        let eps2 = eps * eps;
        let reference = self.table.reference_temperature;
        let second_available = self.table.has_second_order();
        let mut hom = FieldSet::with_len(n);
        let mut first = FieldSet::with_len(n);
        let mut second = FieldSet::with_len(n);
        let mut terms: Vec<Term> = if keep_terms && second_available {
            TERM_NAMES
                .iter()
                .map(|&(name, field)| Term {
                    name,
                    field,
                    values: vec![0.0; if field == FieldKind::Displacement { 2 * n } else { n }],
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut clamped = 0;

        for p in 0..n {
            let (e, bary) = self.macro_points[p];
            let tri = mesh.triangles()[e];
            let sc = |v: &[f64]| mesh.interpolate(v, e, bary);
            let vc = |v: &[f64]| mesh.interpolate_vector(v, e, bary);
            let v2 = |v: &[Vec2]| {
                let mut o = [0.0; 2];
                for a in 0..3 {
                    o[0] += bary[a] * v[tri[a]][0];
                    o[1] += bary[a] * v[tri[a]][1];
                }
                o
            };
            let m2 = |v: &[Mat2]| {
                let mut o = Mat2::ZERO;
                for a in 0..3 {
                    o += v[tri[a]] * bary[a];
                }
                o
            };
            let t0 = sc(&f.temperature);
            let phi0 = sc(&f.potential);
            let u0 = vc(&f.displacement);
            let gt = v2(&f.grad_temperature);
            let gphi = v2(&f.grad_potential);
            let gu = m2(&f.grad_displacement);
            let dtheta = t0 - reference;

            let br = self.table.bracket(t0);
            clamped += br.clamped as usize;
            let lo = &self.table.entries[br.lower];
            let hi = &self.table.entries[br.lower + 1];
            let w = br.weight;
            let cp = &self.cell_points[p];
            let s = |a: &Vec<f64>, b: &Vec<f64>| blend_scalar(cell, a, b, w, cp);
            let v = |a: &Vec<f64>, b: &Vec<f64>| blend_vector(cell, a, b, w, cp);

            // first order
            let mut t1 = 0.0;
            let mut phi1 = 0.0;
            let mut u1 = [0.0; 2];
            for a in 0..2 {
                t1 += s(&lo.first.m[a], &hi.first.m[a]) * gt[a];
                phi1 += s(&lo.first.h[a], &hi.first.h[a]) * gphi[a];
                for m in 0..2 {
                    let nv = v(&lo.first.n[m][a], &hi.first.n[m][a]);
                    u1[0] += nv[0] * gu.0[m][a];
                    u1[1] += nv[1] * gu.0[m][a];
                }
            }
            let pv = v(&lo.first.p, &hi.first.p);
            u1[0] += pv[0] * dtheta;
            u1[1] += pv[1] * dtheta;

            hom.temperature[p] = t0;
            hom.potential[p] = phi0;
            hom.displacement[2 * p] = u0[0];
            hom.displacement[2 * p + 1] = u0[1];
            first.temperature[p] = t0 + eps * t1;
            first.potential[p] = phi0 + eps * phi1;
            first.displacement[2 * p] = u0[0] + eps * u1[0];
            first.displacement[2 * p + 1] = u0[1] + eps * u1[1];

            if !second_available {
                second.temperature[p] = first.temperature[p];
                second.potential[p] = first.potential[p];
                second.displacement[2 * p] = first.displacement[2 * p];
                second.displacement[2 * p + 1] = first.displacement[2 * p + 1];
                continue;
            }
            let (lo2, hi2) = (lo.second.as_ref().unwrap(), hi.second.as_ref().unwrap());
            let ht = m2(&f.hess_temperature);
            let hphi = m2(&f.hess_potential);
            let hu = {
                let mut o = [Mat2::ZERO; 2];
                for a in 0..3 {
                    o[0] += f.hess_displacement[tri[a]][0] * bary[a];
                    o[1] += f.hess_displacement[tri[a]][1] * bary[a];
                }
                o
            };
            let tt = sc(&f.time.temperature_rate);
            let utt = vc(&f.time.acceleration);
            let gut = m2(&f.time.velocity_gradient);

            let mut tq = [0.0; 6];
            tq[0] = s(&lo2.q, &hi2.q) * tt;
            for a1 in 0..2 {
                for a2 in 0..2 {
                    tq[1] += s(&lo2.m2[a1][a2], &hi2.m2[a1][a2]) * ht.0[a1][a2];
                    tq[2] += s(&lo2.r[a1][a2], &hi2.r[a1][a2]) * gt[a2] * gt[a1];
                    tq[3] += s(&lo2.o[a1][a2], &hi2.o[a1][a2]) * gt[a1] * gt[a2];
                    tq[4] += s(&lo2.g[a1][a2], &hi2.g[a1][a2]) * gphi[a1] * gphi[a2];
                    tq[5] += s(&lo2.j[a1][a2], &hi2.j[a1][a2]) * gut.0[a1][a2];
                }
            }
            let mut pq = [0.0; 3];
            for a1 in 0..2 {
                for a2 in 0..2 {
                    pq[0] += s(&lo2.h2[a1][a2], &hi2.h2[a1][a2]) * hphi.0[a1][a2];
                    pq[1] += s(&lo2.z[a1][a2], &hi2.z[a1][a2]) * gt[a2] * gphi[a1];
                    pq[2] += s(&lo2.w[a1][a2], &hi2.w[a1][a2]) * gt[a1] * gphi[a2];
                }
            }
            let mut uq = [[0.0; 2]; 7];
            let mut add = |slot: usize, vec: Vec2, factor: f64| {
                uq[slot][0] += vec[0] * factor;
                uq[slot][1] += vec[1] * factor;
            };
            for a1 in 0..2 {
                add(1, v(&lo2.f[a1], &hi2.f[a1]), utt[a1]);
                add(2, v(&lo2.x[a1], &hi2.x[a1]), gt[a1]);
                add(4, v(&lo2.b[a1], &hi2.b[a1]), gt[a1] * dtheta);
                add(5, v(&lo2.c[a1], &hi2.c[a1]), gt[a1] * dtheta);
                for m in 0..2 {
                    for a2 in 0..2 {
                        add(0, v(&lo2.n2[m][a1][a2], &hi2.n2[m][a1][a2]), hu[m].0[a1][a2]);
                        // factored form: the last index is contracted with ∇T₀
                        add(3, v(&lo2.a[m][a1][a2], &hi2.a[m][a1][a2]), gt[a2] * gu.0[m][a1]);
                        add(6, v(&lo2.d[m][a1][a2], &hi2.d[m][a1][a2]), gt[a1] * gu.0[m][a2]);
                    }
                }
            }

            let mut t2 = first.temperature[p];
            for (k, q) in tq.iter().enumerate() {
                let val = eps2 * q;
                t2 += val;
                if keep_terms {
                    terms[k].values[p] = val;
                }
            }
            let mut phi2 = first.potential[p];
            for (k, q) in pq.iter().enumerate() {
                let val = eps2 * q;
                phi2 += val;
                if keep_terms {
                    terms[6 + k].values[p] = val;
                }
            }
            let mut u2 = [first.displacement[2 * p], first.displacement[2 * p + 1]];
            for (k, q) in uq.iter().enumerate() {
                for i in 0..2 {
                    let val = eps2 * q[i];
                    u2[i] += val;
                    if keep_terms {
                        terms[9 + k].values[2 * p + i] = val;
                    }
                }
            }
            second.temperature[p] = t2;
            second.potential[p] = phi2;
            second.displacement[2 * p] = u2[0];
            second.displacement[2 * p + 1] = u2[1];
        }
        Reconstruction {
            homogenized: hom,
            first_order: first,
            second_order: second,
            terms,
            clamped_lookups: clamped,
        }
    }
}
