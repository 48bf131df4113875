//! Homogenized coefficients and the off-line temperature table.

use alloc::format;
use alloc::vec::Vec;

use crate::cell::{
    derivative_stencil, CellBoundary, CellDiscretization, CouplingTemperature, Field, FirstOrderCellSet,
    PhaseCoefficients, SecondOrderCellSet,
};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::materials::MaterialLaw;
use crate::mesh::{Mesh, Phase};
use crate::tensor::{Mat2, Tensor4, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogenizedCoefficients {
    pub temperature: f64,
    /// Effective heat capacity including the thermo-elastic contribution.
    pub s_hat: f64,
    pub k_hat: Mat2,
    pub lambda_hat: Mat2,
    /// Coefficient of the Joule heating term.
    pub lambda_hat_star: Mat2,
    pub rho_hat: f64,
    pub c_hat: Tensor4,
    /// Effective thermal stress modulus.
    pub beta_hat: Mat2,
    /// Effective thermo-elastic coupling in the heat equation.
    pub beta_hat_star: Mat2,
}

impl HomogenizedCoefficients {
    pub fn zero(temperature: f64) -> Self {
        HomogenizedCoefficients {
            temperature,
            s_hat: 0.0,
            k_hat: Mat2::ZERO,
            lambda_hat: Mat2::ZERO,
            lambda_hat_star: Mat2::ZERO,
            rho_hat: 0.0,
            c_hat: Tensor4::ZERO,
            beta_hat: Mat2::ZERO,
            beta_hat_star: Mat2::ZERO,
        }
    }

    /// `wa * a + wb * b` coefficient by coefficient.
    pub fn combine(a: &Self, wa: f64, b: &Self, wb: f64, temperature: f64) -> Self {
        HomogenizedCoefficients {
            temperature,
            s_hat: wa * a.s_hat + wb * b.s_hat,
            k_hat: a.k_hat * wa + b.k_hat * wb,
            lambda_hat: a.lambda_hat * wa + b.lambda_hat * wb,
            lambda_hat_star: a.lambda_hat_star * wa + b.lambda_hat_star * wb,
            rho_hat: wa * a.rho_hat + wb * b.rho_hat,
            c_hat: a.c_hat * wa + b.c_hat * wb,
            beta_hat: a.beta_hat * wa + b.beta_hat * wb,
            beta_hat_star: a.beta_hat_star * wa + b.beta_hat_star * wb,
        }
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Cell averages defining the homogenized coefficients from the first-order correctors.
/// `theta` multiplies the thermo-elastic part of the effective heat capacity.
pub fn compute_coefficients(
    mesh: &Mesh,
    law: &MaterialLaw,
    first: &FirstOrderCellSet,
    theta: f64,
) -> HomogenizedCoefficients {
    let t = first.temperature;
    let phases = [
        PhaseCoefficients::new(law, Phase::Matrix, t),
        PhaseCoefficients::new(law, Phase::Inclusion, t),
    ];
    let mut h = HomogenizedCoefficients::zero(t);
    for e in 0..mesh.triangle_count() {
        let area = mesh.geometry(e).area;
        let pc = &phases[mesh.phases()[e].index()];
        let v = pc.value;
        let gm: [Vec2; 2] = [mesh.gradient(&first.m[0], e), mesh.gradient(&first.m[1], e)];
        let gh: [Vec2; 2] = [mesh.gradient(&first.h[0], e), mesh.gradient(&first.h[1], e)];
        let gn = [
            [mesh.vector_gradient(&first.n[0][0], e), mesh.vector_gradient(&first.n[0][1], e)],
            [mesh.vector_gradient(&first.n[1][0], e), mesh.vector_gradient(&first.n[1][1], e)],
        ];
        let gp = mesh.vector_gradient(&first.p, e);
        h.s_hat += area * (v.rho * v.c + theta * v.beta * (gp[0][0] + gp[1][1]));
        h.rho_hat += area * v.rho;
        for i in 0..2 {
            for j in 0..2 {
                let d = delta(i, j);
                h.k_hat.0[i][j] += area * v.k * (d + gm[j][i]);
                h.lambda_hat.0[i][j] += area * v.lambda * (d + gh[j][i]);
                h.lambda_hat_star.0[i][j] += area
                    * v.lambda
                    * (d + gh[j][i] + gh[i][j] + gh[i][0] * gh[j][0] + gh[i][1] * gh[j][1]);
                let mut cp = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        cp += pc.c.get(i, j, k, l) * gp[k][l];
                    }
                }
                h.beta_hat.0[i][j] += area * (v.beta * d - cp);
                h.beta_hat_star.0[i][j] += area * v.beta * (d + gn[i][j][0][0] + gn[i][j][1][1]);
                for k in 0..2 {
                    for l in 0..2 {
                        let mut acc = pc.c.get(i, j, k, l);
                        for a in 0..2 {
                            for b in 0..2 {
                                acc += pc.c.get(i, j, a, b) * gn[k][l][a][b];
                            }
                        }
                        h.c_hat.0[i][j][k][l] += area * acc;
                    }
                }
            }
        }
    }
    let inv = 1.0 / mesh.area();
    HomogenizedCoefficients::combine(&h, inv, &h, 0.0, t)
}

/// Consistency of a coefficient set: the two pairs of coefficients that must coincide, the
/// symmetries, and positivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport {
    /// `max|λ̂* − λ̂| / max|λ̂|`
    pub lambda_deviation: f64,
    /// `max|β̂* − β̂| / max|β̂|`
    pub beta_deviation: f64,
    /// Largest relative asymmetry among the second-order tensors and the fourth-order tensor.
    pub asymmetry: f64,
    pub min_k_eigenvalue: f64,
    pub min_lambda_eigenvalue: f64,
    pub min_c_eigenvalue: f64,
}

impl IdentityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.lambda_deviation <= tol
            && self.beta_deviation <= tol
            && self.asymmetry <= tol
            && self.min_k_eigenvalue > 0.0
            && self.min_lambda_eigenvalue > 0.0
            && self.min_c_eigenvalue > 0.0
    }
}

fn rel_diff(a: &Mat2, b: &Mat2) -> f64 {
    (*a - *b).max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

fn asym(a: &Mat2) -> f64 {
    rel_diff(a, &a.transpose())
}

pub fn verify_identities(h: &HomogenizedCoefficients) -> IdentityReport {
    let mut asymmetry = h.c_hat.symmetry_defect();
    for m in [&h.k_hat, &h.lambda_hat, &h.lambda_hat_star, &h.beta_hat, &h.beta_hat_star] {
        asymmetry = asymmetry.max(asym(m));
    }
    let min_eig = |m: &Mat2| {
        let s = (*m + m.transpose()) * 0.5;
        s.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
    };
    IdentityReport {
        lambda_deviation: rel_diff(&h.lambda_hat_star, &h.lambda_hat),
        beta_deviation: rel_diff(&h.beta_hat_star, &h.beta_hat),
        asymmetry,
        min_k_eigenvalue: min_eig(&h.k_hat),
        min_lambda_eigenvalue: min_eig(&h.lambda_hat),
        min_c_eigenvalue: h.c_hat.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b)),
    }
}

/// Harmonic and arithmetic volume averages of a scalar phase property, which bound the
/// eigenvalues of the corresponding homogenized tensor.
pub fn mean_bounds(mesh: &Mesh, matrix_value: f64, inclusion_value: f64) -> (f64, f64) {
    let total = mesh.area();
    let fi = mesh.phase_area(Phase::Inclusion) / total;
    let fm = 1.0 - fi;
    let arithmetic = fm * matrix_value + fi * inclusion_value;
    let harmonic = 1.0 / (fm / matrix_value + fi / inclusion_value);
    (harmonic, arithmetic)
}

/// Runs independent jobs, possibly in parallel.
pub trait Executor {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableSettings {
    pub temperatures: Vec<f64>,
    pub coupling: CouplingTemperature,
    pub reference_temperature: f64,
    /// Whether to solve the second-order families as well.
    pub second_order: bool,
}

impl TableSettings {
    /// `count` equally spaced temperatures covering `range`.
    pub fn equidistant(range: [f64; 2], count: usize, reference_temperature: f64) -> Self {
        let n = count.max(2);
        let temperatures = (0..n)
            .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
            .collect();
        TableSettings {
            temperatures,
            coupling: CouplingTemperature::Local,
            reference_temperature,
            second_order: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub first: FirstOrderCellSet,
    pub d_first: FirstOrderCellSet,
    pub hom: HomogenizedCoefficients,
    pub d_hom: HomogenizedCoefficients,
    pub second: Option<SecondOrderCellSet>,
}

/// Position of a temperature within the table: the entries `lower` and `lower + 1` are
/// blended with weight `weight` on the upper one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lower: usize,
    pub weight: f64,
    /// The temperature fell outside the table and was clamped to its end.
    pub clamped: bool,
}

/// Cell functions and homogenized coefficients sampled at a set of temperatures.
#[derive(Clone, Debug)]
pub struct TemperatureTable {
    pub temperatures: Vec<f64>,
    pub entries: Vec<TableEntry>,
    pub mesh: Mesh,
    pub boundary: CellBoundary,
    pub coupling: CouplingTemperature,
    pub reference_temperature: f64,
    pub law: MaterialLaw,
}

fn check_temperatures(law: &MaterialLaw, temps: &[f64]) -> Result<()> {
    if temps.len() < 2 {
        return Err(Error::InvalidArgument("the table needs at least two temperatures".into()));
    }
    if temps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "table temperatures must be strictly increasing".into(),
        ));
    }
    for &t in temps {
        if !law.in_range(t) {
            return Err(Error::InvalidArgument(format!(
                "table temperature {t} lies outside the material range [{}, {}]",
                law.range[0], law.range[1]
            )));
        }
    }
    Ok(())
}

/// Two-pass off-line stage: first-order correctors and coefficients at every temperature,
/// then temperature derivatives by differences over the table, then the second-order families.
pub fn build_table<E: Executor>(
    disc: &CellDiscretization,
    law: &MaterialLaw,
    settings: &TableSettings,
    exec: &E,
) -> Result<TemperatureTable> {
    let temps = &settings.temperatures;
    check_temperatures(law, temps)?;
    let theta = |t: f64| settings.coupling.resolve(t, settings.reference_temperature);
    let first_pass = exec.map(temps.len(), &|i| -> Result<(FirstOrderCellSet, HomogenizedCoefficients)> {
        let first = disc.solve_first_order(law, temps[i])?;
        let hom = compute_coefficients(disc.mesh(), law, &first, theta(temps[i]));
        Ok((first, hom))
    });
    let mut firsts = Vec::with_capacity(temps.len());
    let mut homs = Vec::with_capacity(temps.len());
    for r in first_pass {
        let (f, h) = r?;
        firsts.push(f);
        homs.push(h);
    }
    let mut d_firsts = Vec::with_capacity(temps.len());
    let mut d_homs = Vec::with_capacity(temps.len());
    for i in 0..temps.len() {
        let (lo, hi) = derivative_stencil(temps.len(), i)?;
        let inv = 1.0 / (temps[hi] - temps[lo]);
        d_firsts.push(FirstOrderCellSet::combine(&firsts[hi], inv, &firsts[lo], -inv, temps[i]));
        d_homs.push(HomogenizedCoefficients::combine(&homs[hi], inv, &homs[lo], -inv, temps[i]));
    }
    let seconds: Vec<Option<SecondOrderCellSet>> = if settings.second_order {
        let pass = exec.map(temps.len(), &|i| {
            disc.solve_second_order(law, &firsts[i], &homs[i], &d_firsts[i], &d_homs[i], theta(temps[i]))
        });
        pass.into_iter().map(|r| r.map(Some)).collect::<Result<_>>()?
    } else {
        (0..temps.len()).map(|_| None).collect()
    };
    let entries = firsts
        .into_iter()
        .zip(d_firsts)
        .zip(homs.into_iter().zip(d_homs))
        .zip(seconds)
        .map(|(((first, d_first), (hom, d_hom)), second)| TableEntry {
            first,
            d_first,
            hom,
            d_hom,
            second,
        })
        .collect();
    Ok(TemperatureTable {
        temperatures: temps.clone(),
        entries,
        mesh: disc.mesh().clone(),
        boundary: disc.boundary(),
        coupling: settings.coupling,
        reference_temperature: settings.reference_temperature,
        law: law.clone(),
    })
}

impl TemperatureTable {
    pub fn has_second_order(&self) -> bool {
        self.entries.iter().all(|e| e.second.is_some())
    }

    /// Linear interpolation bracket for temperature `t`, clamped to the table ends.
    pub fn bracket(&self, t: f64) -> Bracket {
        let temps = &self.temperatures;
        let n = temps.len();
        if !(t >= temps[0]) {
            return Bracket {
                lower: 0,
                weight: 0.0,
                clamped: true,
            };
        }
        if t > temps[n - 1] {
            return Bracket {
                lower: n - 2,
                weight: 1.0,
                clamped: true,
            };
        }
        let i = temps.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        Bracket {
            lower: i,
            weight: (t - temps[i]) / (temps[i + 1] - temps[i]),
            clamped: false,
        }
    }

    pub fn coefficients(&self, t: f64) -> (HomogenizedCoefficients, bool) {
        let b = self.bracket(t);
        let (lo, hi) = (&self.entries[b.lower], &self.entries[b.lower + 1]);
        (
            HomogenizedCoefficients::combine(&lo.hom, 1.0 - b.weight, &hi.hom, b.weight, t),
            b.clamped,
        )
    }

    pub fn coefficient_derivatives(&self, t: f64) -> HomogenizedCoefficients {
        let b = self.bracket(t);
        let (lo, hi) = (&self.entries[b.lower], &self.entries[b.lower + 1]);
        HomogenizedCoefficients::combine(&lo.d_hom, 1.0 - b.weight, &hi.d_hom, b.weight, t)
    }

    pub fn first_order_at(&self, t: f64) -> FirstOrderCellSet {
        let b = self.bracket(t);
        let (lo, hi) = (&self.entries[b.lower], &self.entries[b.lower + 1]);
        FirstOrderCellSet::combine(&lo.first, 1.0 - b.weight, &hi.first, b.weight, t)
    }

    pub fn second_order_at(&self, t: f64) -> Option<SecondOrderCellSet> {
        let b = self.bracket(t);
        let lo = self.entries[b.lower].second.as_ref()?;
        let hi = self.entries[b.lower + 1].second.as_ref()?;
        Some(SecondOrderCellSet::combine(lo, 1.0 - b.weight, hi, b.weight, t))
    }

    /// Cell point of a macroscopic position `x` for period `eps`.
    pub fn cell_point(&self, x: Vec2, eps: f64) -> Result<CellPoint> {
        let frac = |v: f64| {
            let s = v / eps;
            let f = s - s.floor();
            // points on a cell face map to the lower face
            if f > 1.0 - 1e-12 {
                0.0
            } else {
                f
            }
        };
        let y = [frac(x[0]), frac(x[1])];
        let (element, bary) = self.mesh.locate_point(y)?;
        Ok(CellPoint { element, bary })
    }
}

/// Location of a point in the cell mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellPoint {
    pub element: usize,
    pub bary: [f64; 3],
}

/// Value at a cell point of a field blended between two table entries.
#[inline]
pub fn blend_scalar(mesh: &Mesh, lo: &Field, hi: &Field, w: f64, at: &CellPoint) -> f64 {
    let a = mesh.interpolate(lo, at.element, at.bary);
    let b = mesh.interpolate(hi, at.element, at.bary);
    a + w * (b - a)
}

#[inline]
pub fn blend_vector(mesh: &Mesh, lo: &Field, hi: &Field, w: f64, at: &CellPoint) -> Vec2 {
    let a = mesh.interpolate_vector(lo, at.element, at.bary);
    let b = mesh.interpolate_vector(hi, at.element, at.bary);
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_cell_mesh, PhaseGeometry};

    fn disk_cell(h: f64, boundary: CellBoundary) -> CellDiscretization {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        CellDiscretization::new(build_unit_cell_mesh(&g, h).unwrap(), boundary).unwrap()
    }

    #[test]
    fn identities_hold_for_example_composite() {
        let law = MaterialLaw::example_composite();
        for boundary in [CellBoundary::Periodic, CellBoundary::Dirichlet] {
            let disc = disk_cell(0.1, boundary);
            let first = disc.solve_first_order(&law, 300.0).unwrap();
            let hom = compute_coefficients(disc.mesh(), &law, &first, 300.0);
            let report = verify_identities(&hom);
            std::println!("{boundary:?} {hom:?}\n{report:?}");
            assert!(report.passes(1e-8), "{report:?}");
        }
    }
}
