//! Temperature-dependent phase-wise material laws and their temperature derivatives.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Phase;
use crate::tensor::{Mat2, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    Density,
    HeatCapacity,
    ThermalConductivity,
    ElectricalConductivity,
    ThermalModulus,
    YoungModulus,
    PoissonRatio,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Density,
        Quantity::HeatCapacity,
        Quantity::ThermalConductivity,
        Quantity::ElectricalConductivity,
        Quantity::ThermalModulus,
        Quantity::YoungModulus,
        Quantity::PoissonRatio,
    ];

    /// Short name used in configuration files.
    pub fn key(self) -> &'static str {
        match self {
            Quantity::Density => "rho",
            Quantity::HeatCapacity => "c",
            Quantity::ThermalConductivity => "k",
            Quantity::ElectricalConductivity => "lambda",
            Quantity::ThermalModulus => "beta",
            Quantity::YoungModulus => "E",
            Quantity::PoissonRatio => "nu",
        }
    }
}

impl core::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.key() == s)
            .ok_or_else(|| Error::Material(format!("unknown quantity '{s}'")))
    }
}

/// Order of the temperature derivative taken of a coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivativeOrder {
    Value,
    First,
    Second,
}

impl TryFrom<u8> for DerivativeOrder {
    type Error = Error;
    fn try_from(order: u8) -> Result<Self> {
        match order {
            0 => Ok(DerivativeOrder::Value),
            1 => Ok(DerivativeOrder::First),
            2 => Ok(DerivativeOrder::Second),
            _ => Err(Error::Material(format!("derivative order {order} exceeds 2"))),
        }
    }
}

/// A scalar coefficient as a function of temperature.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarLaw {
    /// `a + b T`
    Affine { a: f64, b: f64 },
    /// Piecewise-linear through `(temperatures[i], values[i])`, extended linearly.
    /// Derivatives are taken by centered finite differences.
    Tabulated {
        temperatures: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ScalarLaw {
    pub const fn constant(v: f64) -> Self {
        ScalarLaw::Affine { a: v, b: 0.0 }
    }

    pub fn tabulated(temperatures: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if temperatures.len() < 2 || temperatures.len() != values.len() {
            return Err(Error::Material(
                "a tabulated law needs at least two (temperature, value) pairs".into(),
            ));
        }
        if temperatures.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Material("tabulated temperatures must increase".into()));
        }
        Ok(ScalarLaw::Tabulated {
            temperatures,
            values,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            ScalarLaw::Affine { a, b } => a + b * t,
            ScalarLaw::Tabulated {
                temperatures,
                values,
            } => {
                let n = temperatures.len();
                let i = match temperatures.iter().position(|&x| x > t) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => n - 2,
                }
                .min(n - 2);
                let w = (t - temperatures[i]) / (temperatures[i + 1] - temperatures[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    pub fn derivative(&self, t: f64, order: DerivativeOrder) -> f64 {
        match (self, order) {
            (_, DerivativeOrder::Value) => self.value(t),
            (ScalarLaw::Affine { b, .. }, DerivativeOrder::First) => *b,
            (ScalarLaw::Affine { .. }, DerivativeOrder::Second) => 0.0,
            (ScalarLaw::Tabulated { temperatures, .. }, order) => {
                let span = temperatures[temperatures.len() - 1] - temperatures[0];
                let d = 1e-4 * span;
                match order {
                    DerivativeOrder::First => (self.value(t + d) - self.value(t - d)) / (2.0 * d),
                    _ => (self.value(t + d) - 2.0 * self.value(t) + self.value(t - d)) / (d * d),
                }
            }
        }
    }
}

/// All coefficient laws of one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLaw {
    pub rho: ScalarLaw,
    pub c: ScalarLaw,
    pub k: ScalarLaw,
    pub lambda: ScalarLaw,
    pub beta: ScalarLaw,
    pub young: ScalarLaw,
    pub poisson: ScalarLaw,
}

impl PhaseLaw {
    pub fn get(&self, q: Quantity) -> &ScalarLaw {
        match q {
            Quantity::Density => &self.rho,
            Quantity::HeatCapacity => &self.c,
            Quantity::ThermalConductivity => &self.k,
            Quantity::ElectricalConductivity => &self.lambda,
            Quantity::ThermalModulus => &self.beta,
            Quantity::YoungModulus => &self.young,
            Quantity::PoissonRatio => &self.poisson,
        }
    }

    pub fn get_mut(&mut self, q: Quantity) -> &mut ScalarLaw {
        match q {
            Quantity::Density => &mut self.rho,
            Quantity::HeatCapacity => &mut self.c,
            Quantity::ThermalConductivity => &mut self.k,
            Quantity::ElectricalConductivity => &mut self.lambda,
            Quantity::ThermalModulus => &mut self.beta,
            Quantity::YoungModulus => &mut self.young,
            Quantity::PoissonRatio => &mut self.poisson,
        }
    }

    /// Every coefficient independent of temperature, taken from `self` at `t`.
    pub fn frozen_at(&self, t: f64) -> PhaseLaw {
        let mut out = self.clone();
        for q in Quantity::ALL {
            *out.get_mut(q) = ScalarLaw::constant(self.get(q).value(t));
        }
        out
    }
}

/// Scalar coefficients of one phase at one temperature (or their derivatives).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseProperties {
    pub rho: f64,
    pub c: f64,
    pub k: f64,
    pub lambda: f64,
    pub beta: f64,
    pub young: f64,
    pub poisson: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlaneMode {
    #[default]
    Strain,
    Stress,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// The temperature was outside the declared operating range.
    pub extrapolated: bool,
}

/// Two-phase material description with its operating range and ellipticity floor.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialLaw {
    pub matrix: PhaseLaw,
    pub inclusion: PhaseLaw,
    pub range: [f64; 2],
    pub kappa0: f64,
    pub plane: PlaneMode,
}

impl MaterialLaw {
    /// The two-phase composite used in the reference example: a stiff conducting matrix with
    /// a soft, weakly conducting inclusion.
    pub fn example_composite() -> Self {
        let affine = |a, b| ScalarLaw::Affine { a, b };
        MaterialLaw {
            matrix: PhaseLaw {
                rho: ScalarLaw::constant(0.008),
                c: ScalarLaw::constant(562.5),
                k: affine(4.0, 0.0004),
                lambda: affine(300.0, -0.015),
                beta: affine(3.0, -0.0003),
                young: affine(3.5e6, -3.5e3),
                poisson: ScalarLaw::constant(0.25),
            },
            inclusion: PhaseLaw {
                rho: ScalarLaw::constant(0.002),
                c: ScalarLaw::constant(750.0),
                k: affine(0.04, 0.000004),
                lambda: affine(0.075, -0.00000325),
                beta: affine(7.5, -0.00075),
                young: affine(2.2e6, -2.2e3),
                poisson: ScalarLaw::constant(0.20),
            },
            range: [250.0, 950.0],
            kappa0: 0.01,
            plane: PlaneMode::Strain,
        }
    }

    /// Both phases governed by the same law.
    pub fn single_phase(law: PhaseLaw, range: [f64; 2]) -> Self {
        MaterialLaw {
            matrix: law.clone(),
            inclusion: law,
            range,
            kappa0: 1e-6,
            plane: PlaneMode::Strain,
        }
    }

    pub fn phase(&self, phase: Phase) -> &PhaseLaw {
        match phase {
            Phase::Matrix => &self.matrix,
            Phase::Inclusion => &self.inclusion,
        }
    }

    pub fn in_range(&self, t: f64) -> bool {
        t >= self.range[0] && t <= self.range[1]
    }

    pub fn eval(&self, phase: Phase, quantity: Quantity, t: f64, order: DerivativeOrder) -> Evaluation {
        Evaluation {
            value: self.phase(phase).get(quantity).derivative(t, order),
            extrapolated: !self.in_range(t),
        }
    }

    /// [`MaterialLaw::eval`] with phase and quantity given by name.
    pub fn eval_named(&self, phase: &str, quantity: &str, t: f64, order: u8) -> Result<Evaluation> {
        Ok(self.eval(
            phase.parse()?,
            quantity.parse()?,
            t,
            DerivativeOrder::try_from(order)?,
        ))
    }

    /// All scalar coefficients of a phase at `t`, or their temperature derivatives.
    pub fn properties(&self, phase: Phase, t: f64, order: DerivativeOrder) -> PhaseProperties {
        let law = self.phase(phase);
        PhaseProperties {
            rho: law.rho.derivative(t, order),
            c: law.c.derivative(t, order),
            k: law.k.derivative(t, order),
            lambda: law.lambda.derivative(t, order),
            beta: law.beta.derivative(t, order),
            young: law.young.derivative(t, order),
            poisson: law.poisson.derivative(t, order),
        }
    }

    /// `c_ijkl` of a phase at `t`, or its temperature derivative.
    pub fn elasticity(&self, phase: Phase, t: f64, order: DerivativeOrder) -> Tensor4 {
        let p = self.properties(phase, t, DerivativeOrder::Value);
        match order {
            DerivativeOrder::Value => {
                let (l, m) = lame(p.young, p.poisson, self.plane);
                Tensor4::isotropic(l, m)
            }
            DerivativeOrder::First => {
                let d = self.properties(phase, t, DerivativeOrder::First);
                let (l, m) = lame_derivative(p.young, p.poisson, d.young, d.poisson, self.plane);
                Tensor4::isotropic(l, m)
            }
            DerivativeOrder::Second => {
                let h = 1e-3 * (self.range[1] - self.range[0]).max(1.0);
                let up = self.elasticity(phase, t + h, DerivativeOrder::First);
                let down = self.elasticity(phase, t - h, DerivativeOrder::First);
                (up - down) * (0.5 / h)
            }
        }
    }

    /// `β_ij = β(T) δ_ij`
    pub fn thermal_modulus_tensor(&self, phase: Phase, t: f64) -> Mat2 {
        Mat2::diag(self.phase(phase).beta.value(t))
    }

    /// Checks positivity and the ellipticity floor `kappa0` over `samples` temperatures
    /// evenly spread across the operating range.
    pub fn audit(&self, samples: usize) -> Result<EllipticityReport> {
        if !(self.range[1] > self.range[0]) {
            return Err(Error::Material(format!(
                "operating range [{}, {}] is empty",
                self.range[0], self.range[1]
            )));
        }
        let mut report = EllipticityReport {
            min_scalar: f64::INFINITY,
            min_elastic_eigenvalue: f64::INFINITY,
        };
        let samples = samples.max(2);
        for s in 0..samples {
            let t = self.range[0] + (self.range[1] - self.range[0]) * s as f64 / (samples - 1) as f64;
            for phase in Phase::ALL {
                let p = self.properties(phase, t, DerivativeOrder::Value);
                for (name, v) in [
                    ("rho", p.rho),
                    ("c", p.c),
                    ("k", p.k),
                    ("lambda", p.lambda),
                    ("beta", p.beta),
                    ("E", p.young),
                ] {
                    if !(v > 0.0) {
                        return Err(Error::Material(format!(
                            "{} {name} = {v} is not positive at T = {t}",
                            phase.name()
                        )));
                    }
                }
                if !(p.poisson > 0.0 && p.poisson < 0.5) {
                    return Err(Error::Material(format!(
                        "{} nu = {} is outside (0, 0.5) at T = {t}",
                        phase.name(),
                        p.poisson
                    )));
                }
                let eig = self.elasticity(phase, t, DerivativeOrder::Value).symmetric_eigenvalues()[0];
                let scalar = p.k.min(p.lambda).min(p.beta);
                report.min_scalar = report.min_scalar.min(scalar);
                report.min_elastic_eigenvalue = report.min_elastic_eigenvalue.min(eig);
                if scalar < self.kappa0 || eig < self.kappa0 {
                    return Err(Error::Material(format!(
                        "{} coefficients fall below the ellipticity floor {} at T = {t} \
                         (min scalar {scalar}, min elastic eigenvalue {eig})",
                        phase.name(),
                        self.kappa0
                    )));
                }
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityReport {
    /// Smallest of k, λ, β over phases and samples.
    pub min_scalar: f64,
    pub min_elastic_eigenvalue: f64,
}

/// Lamé pair `(λ, μ)` of the in-plane isotropic tensor.
pub fn lame(young: f64, nu: f64, mode: PlaneMode) -> (f64, f64) {
    let mu = young / (2.0 * (1.0 + nu));
    let lambda = match mode {
        PlaneMode::Strain => young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        PlaneMode::Stress => young * nu / (1.0 - nu * nu),
    };
    (lambda, mu)
}

/// Temperature derivative of the Lamé pair given `E, ν` and their derivatives.
pub fn lame_derivative(young: f64, nu: f64, dyoung: f64, dnu: f64, mode: PlaneMode) -> (f64, f64) {
    let (dl_de, dl_dnu) = match mode {
        PlaneMode::Strain => {
            let den = (1.0 + nu) * (1.0 - 2.0 * nu);
            (nu / den, young * (1.0 + 2.0 * nu * nu) / (den * den))
        }
        PlaneMode::Stress => {
            let den = 1.0 - nu * nu;
            (nu / den, young * (1.0 + nu * nu) / (den * den))
        }
    };
    let dm_de = 1.0 / (2.0 * (1.0 + nu));
    let dm_dnu = -young / (2.0 * (1.0 + nu) * (1.0 + nu));
    (dl_de * dyoung + dl_dnu * dnu, dm_de * dyoung + dm_dnu * dnu)
}

/// Isotropic in-plane elasticity tensor from Young's modulus and Poisson's ratio.
pub fn elasticity_tensor(young: f64, nu: f64, mode: PlaneMode) -> Result<Tensor4> {
    if !(young > 0.0) {
        return Err(Error::Material(format!("Young's modulus {young} must be positive")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Material(format!("Poisson's ratio {nu} must lie in (-1, 0.5)")));
    }
    let (l, m) = lame(young, nu, mode);
    Ok(Tensor4::isotropic(l, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_at_300() {
        let law = MaterialLaw::example_composite();
        let k = law.eval(Phase::Matrix, Quantity::ThermalConductivity, 300.0, DerivativeOrder::Value);
        assert!((k.value - 4.12).abs() < 1e-12);
        assert!(!k.extrapolated);
        let l = law.eval_named("inclusion", "lambda", 300.0, 0).unwrap();
        assert!((l.value - 0.074025).abs() < 1e-12);
        assert_eq!(law.eval_named("matrix", "k", 123.0, 1).unwrap().value, 0.0004);
        assert_eq!(law.eval_named("matrix", "k", 300.0, 2).unwrap().value, 0.0);
        assert!(law.eval_named("matrix", "k", 1200.0, 0).unwrap().extrapolated);
        assert!(law.eval_named("fiber", "k", 300.0, 0).is_err());
        assert!(law.eval_named("matrix", "sigma", 300.0, 0).is_err());
        assert!(law.eval_named("matrix", "k", 300.0, 3).is_err());
    }

    #[test]
    fn thermal_modulus_is_diagonal() {
        let law = MaterialLaw::example_composite();
        let m = law.thermal_modulus_tensor(Phase::Matrix, 300.0);
        assert!((m.get(0, 0) - 2.91).abs() < 1e-12 && (m.get(1, 1) - 2.91).abs() < 1e-12);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        let i = law.thermal_modulus_tensor(Phase::Inclusion, 300.0);
        assert!((i.get(0, 0) - 7.275).abs() < 1e-12);
    }

    #[test]
    fn plane_strain_tensor() {
        let c = elasticity_tensor(2.45e6, 0.25, PlaneMode::Strain).unwrap();
        let oracle = 2.45e6 * 0.75 / (1.25 * 0.5);
        assert!((c.get(0, 0, 0, 0) - oracle).abs() < 1e-6);
        assert_eq!(c.get(0, 0, 1, 1), c.get(1, 1, 0, 0));
        let unit = elasticity_tensor(1.0, 0.0, PlaneMode::Strain).unwrap();
        assert_eq!(unit.get(0, 0, 0, 0), 1.0);
        assert_eq!(unit.get(0, 0, 1, 1), 0.0);
        assert_eq!(unit.get(0, 1, 0, 1), 0.5);
        assert!(elasticity_tensor(1.0, 0.5, PlaneMode::Strain).is_err());
    }

    #[test]
    fn default_range_passes_audit() {
        let law = MaterialLaw::example_composite();
        let r = law.audit(100).unwrap();
        assert!(r.min_scalar >= law.kappa0);
        let mut hot = law.clone();
        hot.range = [250.0, 1000.0];
        assert!(hot.audit(100).is_err());
    }

    #[test]
    fn tabulated_law_interpolates() {
        let law = ScalarLaw::tabulated(alloc::vec![0.0, 1.0, 3.0], alloc::vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(law.value(0.5), 1.0);
        assert_eq!(law.value(2.0), 3.0);
        assert_eq!(law.value(4.0), 5.0);
        assert!((law.derivative(2.0, DerivativeOrder::First) - 1.0).abs() < 1e-9);
    }
}
