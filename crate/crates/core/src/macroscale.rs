//! Time stepping of the coupled thermal, electric and mechanical system on one mesh.
//!
//! The same stepper drives the homogenized problem (coefficients from the temperature table)
//! and the fine-scale reference (coefficients from the phase laws), through [`Medium`].
//! Each step solves, in order, the potential at the half step, the temperature with a
//! Crank–Nicolson diffusion term and coefficients frozen at the extrapolated half-step
//! temperature, and the displacement with an implicit second difference in time.

use alloc::vec;
use alloc::vec::Vec;

use crate::cell::CouplingTemperature;
use crate::error::{Error, Result};
use crate::expr::SpaceTimeFn;
use crate::fem::{
    assemble_diffusion, assemble_elasticity, assemble_mass, assemble_source, assemble_vector_flux,
    assemble_vector_source, solve_constrained, Constraints, CsrMatrix, QuadPoint, Reduction, SolveOptions,
    Space, ORDER2,
};
use crate::homog::TemperatureTable;
use crate::materials::{DerivativeOrder, MaterialLaw};
use crate::mesh::Mesh;
use crate::reconstruct::recover_vector_gradient;
use crate::tensor::{Mat2, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || steps == 0 {
            return Err(Error::InvalidArgument(
                "the time grid needs a positive step and at least one step".into(),
            ));
        }
        Ok(TimeGrid { dt, steps })
    }

    /// Grid with `steps` equal steps up to `final_time`.
    pub fn covering(final_time: f64, steps: usize) -> Result<Self> {
        TimeGrid::new(final_time / steps.max(1) as f64, steps)
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, m: f64) -> f64 {
        m * self.dt
    }
}

#[derive(Clone, Debug)]
pub struct Sources {
    pub heat: SpaceTimeFn,
    pub charge: SpaceTimeFn,
    pub force: [SpaceTimeFn; 2],
}

#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub temperature: SpaceTimeFn,
    pub potential: SpaceTimeFn,
    pub displacement: [SpaceTimeFn; 2],
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub temperature: SpaceTimeFn,
    pub displacement: [SpaceTimeFn; 2],
    pub velocity: [SpaceTimeFn; 2],
}

/// Whether the displacement gradient in the heat equation's coupling term is the nodal
/// recovered gradient or the raw elementwise gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CouplingGradient {
    #[default]
    Recovered,
    Elementwise,
}

/// Data of an evolution problem on the unit square with Dirichlet conditions everywhere.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sources: Sources,
    pub boundary: BoundaryData,
    pub initial: InitialData,
    /// Stress-free temperature `T̃`.
    pub reference_temperature: f64,
    pub coupling: CouplingTemperature,
    pub coupling_gradient: CouplingGradient,
    pub grid: TimeGrid,
    /// Keep every `stride`-th step (the initial and final states are always kept).
    pub snapshot_stride: usize,
    pub solver: SolveOptions,
}

impl Problem {
    /// Constant sources, constant boundary values equal to the reference state, at rest.
    pub fn example(grid: TimeGrid) -> Self {
        let c = SpaceTimeFn::Constant;
        Problem {
            sources: Sources {
                heat: c(20000.0),
                charge: c(200.0),
                force: [c(5000.0), c(5000.0)],
            },
            boundary: BoundaryData {
                temperature: c(300.0),
                potential: c(0.0),
                displacement: [c(0.0), c(0.0)],
            },
            initial: InitialData {
                temperature: c(300.0),
                displacement: [c(0.0), c(0.0)],
                velocity: [c(0.0), c(0.0)],
            },
            reference_temperature: 300.0,
            coupling: CouplingTemperature::Local,
            coupling_gradient: CouplingGradient::Recovered,
            grid,
            snapshot_stride: 1,
            solver: SolveOptions::default(),
        }
    }

    /// The example problem with every source multiplied by `factor`.
    pub fn scale_sources(mut self, factor: f64) -> Self {
        let scale = |f: &SpaceTimeFn| match f {
            SpaceTimeFn::Constant(v) => SpaceTimeFn::Constant(v * factor),
            other => {
                let g = other.clone();
                SpaceTimeFn::closure(move |x, t| factor * g.eval(x, t))
            }
        };
        self.sources.heat = scale(&self.sources.heat);
        self.sources.charge = scale(&self.sources.charge);
        self.sources.force = [scale(&self.sources.force[0]), scale(&self.sources.force[1])];
        self
    }
}

/// Every coefficient the schemes need, at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub s: f64,
    pub k: Mat2,
    pub lambda: Mat2,
    pub lambda_star: Mat2,
    pub beta_star: Mat2,
    pub rho: f64,
    pub c: Tensor4,
    pub beta: Mat2,
}

impl PointCoefficients {
    fn blend3(p: [&PointCoefficients; 3], w: [f64; 3]) -> PointCoefficients {
        let m2 = |f: fn(&PointCoefficients) -> Mat2| f(p[0]) * w[0] + f(p[1]) * w[1] + f(p[2]) * w[2];
        PointCoefficients {
            s: p[0].s * w[0] + p[1].s * w[1] + p[2].s * w[2],
            k: m2(|q| q.k),
            lambda: m2(|q| q.lambda),
            lambda_star: m2(|q| q.lambda_star),
            beta_star: m2(|q| q.beta_star),
            rho: p[0].rho * w[0] + p[1].rho * w[1] + p[2].rho * w[2],
            c: p[0].c * w[0] + p[1].c * w[1] + p[2].c * w[2],
            beta: m2(|q| q.beta),
        }
    }
}

/// Coefficients for one temperature field, ready to be evaluated at quadrature points.
pub enum CoefficientSample<'a> {
    /// Nodal values interpolated linearly inside each element.
    Nodal(Vec<PointCoefficients>),
    /// Phase laws evaluated at the interpolated temperature.
    Phase {
        law: &'a MaterialLaw,
        temperature: Vec<f64>,
    },
}

impl CoefficientSample<'_> {
    pub fn at(&self, mesh: &Mesh, qp: &QuadPoint) -> PointCoefficients {
        match self {
            CoefficientSample::Nodal(values) => {
                let t = mesh.triangles()[qp.element];
                PointCoefficients::blend3([&values[t[0]], &values[t[1]], &values[t[2]]], qp.bary)
            }
            CoefficientSample::Phase { law, temperature } => {
                let t = mesh.interpolate(temperature, qp.element, qp.bary);
                phase_coefficients(law, qp.phase, t)
            }
        }
    }
}

fn phase_coefficients(law: &MaterialLaw, phase: crate::mesh::Phase, t: f64) -> PointCoefficients {
    let p = law.properties(phase, t, DerivativeOrder::Value);
    PointCoefficients {
        s: p.rho * p.c,
        k: Mat2::diag(p.k),
        lambda: Mat2::diag(p.lambda),
        lambda_star: Mat2::diag(p.lambda),
        beta_star: Mat2::diag(p.beta),
        rho: p.rho,
        c: law.elasticity(phase, t, DerivativeOrder::Value),
        beta: Mat2::diag(p.beta),
    }
}

/// Source of coefficients for the stepper.
pub trait Medium {
    fn mesh(&self) -> &Mesh;
    /// Coefficients for a nodal temperature field, and the number of lookups that had to be
    /// clamped to the admissible temperature range.
    fn sample(&self, temperature: &[f64]) -> (CoefficientSample<'_>, usize);
}

/// Homogenized medium: nodal lookups in the temperature table.
pub struct HomogenizedMedium<'a> {
    pub mesh: &'a Mesh,
    pub table: &'a TemperatureTable,
}

impl Medium for HomogenizedMedium<'_> {
    fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn sample(&self, temperature: &[f64]) -> (CoefficientSample<'_>, usize) {
        let mut clamped = 0;
        let values = temperature
            .iter()
            .map(|&t| {
                let (h, c) = self.table.coefficients(t);
                clamped += c as usize;
                PointCoefficients {
                    s: h.s_hat,
                    k: h.k_hat,
                    lambda: h.lambda_hat,
                    lambda_star: h.lambda_hat_star,
                    beta_star: h.beta_hat_star,
                    rho: h.rho_hat,
                    c: h.c_hat,
                    beta: h.beta_hat,
                }
            })
            .collect();
        (CoefficientSample::Nodal(values), clamped)
    }
}

/// Heterogeneous medium: the phase laws of each element, evaluated pointwise.
pub struct HeterogeneousMedium<'a> {
    pub mesh: &'a Mesh,
    pub law: &'a MaterialLaw,
}

impl Medium for HeterogeneousMedium<'_> {
    fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn sample(&self, temperature: &[f64]) -> (CoefficientSample<'_>, usize) {
        let [lo, hi] = self.law.range;
        let mut clamped = 0;
        let temperature = temperature
            .iter()
            .map(|&t| {
                if t < lo || t > hi || t.is_nan() {
                    clamped += 1;
                }
                t.clamp(lo, hi)
            })
            .collect();
        (
            CoefficientSample::Phase {
                law: self.law,
                temperature,
            },
            clamped,
        )
    }
}

/// State after step `step`: fields at `t_step` plus the history the schemes and the
/// reconstruction need.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub temperature: Vec<f64>,
    pub temperature_prev: Vec<f64>,
    /// Potential at the latest half step (at step 0, the initial potential).
    pub potential: Vec<f64>,
    pub displacement: Vec<f64>,
    pub displacement_prev: Vec<f64>,
    pub displacement_prev2: Vec<f64>,
}

/// Solver accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub potential_solves: usize,
    pub temperature_solves: usize,
    pub displacement_solves: usize,
    pub max_iterations: usize,
    pub clamped_lookups: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub snapshots: Vec<Snapshot>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory holds at least the initial state")
    }

    pub fn at_step(&self, step: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.step == step)
    }
}

/// Sequential driver of the schemes on one medium.
pub struct Stepper<'a, M: Medium> {
    medium: &'a M,
    problem: &'a Problem,
    scalar: Space,
    vector: Space,
    scalar_reduction: Reduction,
    vector_reduction: Reduction,
    pub step: usize,
    pub temperature: Vec<f64>,
    pub temperature_prev: Vec<f64>,
    /// Temperature at which the current step freezes its coefficients.
    pub half_temperature: Vec<f64>,
    pub potential: Vec<f64>,
    pub displacement: Vec<f64>,
    pub displacement_prev: Vec<f64>,
    pub displacement_prev2: Vec<f64>,
    pub stats: StepStats,
}

impl<'a, M: Medium> Stepper<'a, M> {
    /// Sets the initial state: `T⁰`, `U⁰` and `U⁻¹ = U⁰ − Δt Ũ¹`, with boundary values imposed.
    pub fn new(medium: &'a M, problem: &'a Problem) -> Result<Self> {
        let mesh = medium.mesh();
        let scalar = Space::scalar(mesh);
        let vector = Space::vector(mesh);
        let scalar_reduction = Reduction::new(scalar.pattern(), Constraints::boundary(mesh, 1));
        let vector_reduction = Reduction::new(vector.pattern(), Constraints::boundary(mesh, 2));
        let init = &problem.initial;
        let dt = problem.grid.dt;
        let mut temperature: Vec<f64> = mesh.nodes().iter().map(|&x| init.temperature.eval(x, 0.0)).collect();
        let mut displacement = vec![0.0; 2 * mesh.node_count()];
        let mut displacement_prev = vec![0.0; 2 * mesh.node_count()];
        for (n, &x) in mesh.nodes().iter().enumerate() {
            for i in 0..2 {
                let u = init.displacement[i].eval(x, 0.0);
                displacement[2 * n + i] = u;
                displacement_prev[2 * n + i] = u - dt * init.velocity[i].eval(x, 0.0);
            }
        }
        let mut stepper = Stepper {
            medium,
            problem,
            scalar,
            vector,
            scalar_reduction,
            vector_reduction,
            step: 0,
            temperature_prev: Vec::new(),
            half_temperature: Vec::new(),
            potential: vec![0.0; mesh.node_count()],
            displacement_prev2: Vec::new(),
            temperature: Vec::new(),
            displacement: Vec::new(),
            displacement_prev: Vec::new(),
            stats: StepStats::default(),
        };
        stepper.impose_scalar(&mut temperature, &problem.boundary.temperature, 0.0);
        stepper.impose_vector(&mut displacement, 0.0);
        stepper.temperature_prev = temperature.clone();
        stepper.half_temperature = temperature.clone();
        stepper.temperature = temperature;
        // zero backward-difference acceleration at the initial state
        stepper.displacement_prev2 = displacement_prev
            .iter()
            .zip(&displacement)
            .map(|(p, u)| 2.0 * p - u)
            .collect();
        stepper.displacement = displacement;
        stepper.displacement_prev = displacement_prev;
        Ok(stepper)
    }

    pub fn mesh(&self) -> &Mesh {
        self.medium.mesh()
    }

    pub fn time(&self) -> f64 {
        self.problem.grid.time(self.step as f64)
    }

    fn impose_scalar(&self, field: &mut [f64], data: &SpaceTimeFn, t: f64) {
        let mesh = self.medium.mesh();
        for &n in mesh.boundary_nodes() {
            field[n] = data.eval(mesh.nodes()[n], t);
        }
    }

    fn impose_vector(&self, field: &mut [f64], t: f64) {
        let mesh = self.medium.mesh();
        for &n in mesh.boundary_nodes() {
            for i in 0..2 {
                field[2 * n + i] = self.problem.boundary.displacement[i].eval(mesh.nodes()[n], t);
            }
        }
    }

    fn boundary_scalar(&self, data: &SpaceTimeFn, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.medium.mesh().node_count()];
        self.impose_scalar(&mut out, data, t);
        out
    }

    fn sample(&mut self, temperature: &[f64]) -> CoefficientSample<'a> {
        let (s, clamped) = self.medium.sample(temperature);
        self.stats.clamped_lookups += clamped;
        s
    }

    fn solve(
        &mut self,
        a: &CsrMatrix,
        b: &[f64],
        vector: bool,
        fixed: &[f64],
        guess: &[f64],
    ) -> Result<Vec<f64>> {
        let reduction = if vector {
            &self.vector_reduction
        } else {
            &self.scalar_reduction
        };
        let (x, report) = solve_constrained(a, b, reduction, fixed, Some(guess), &self.problem.solver)?;
        self.stats.max_iterations = self.stats.max_iterations.max(report.iterations);
        Ok(x)
    }

    fn potential_solve(&mut self, coefs: &CoefficientSample<'_>, t: f64) -> Result<Vec<f64>> {
        let mesh = self.medium.mesh();
        let a = assemble_diffusion(mesh, &self.scalar, &ORDER2, |qp| coefs.at(mesh, qp).lambda)?;
        let charge = &self.problem.sources.charge;
        let b = assemble_source(mesh, &ORDER2, |qp| charge.eval(qp.x, t));
        let fixed = self.boundary_scalar(&self.problem.boundary.potential, t);
        let guess = self.potential.clone();
        let x = self.solve(&a, &b, false, &fixed, &guess)?;
        self.stats.potential_solves += 1;
        Ok(x)
    }

    /// Potential at the initial time with coefficients at `T⁰`.
    pub fn solve_initial_potential(&mut self) -> Result<()> {
        let temps = self.temperature.clone();
        let coefs = self.sample(&temps);
        self.potential = self.potential_solve(&coefs, 0.0)?;
        Ok(())
    }

    /// Nodal displacement gradients used by the coupling term.
    fn displacement_gradient(&self, u: &[f64]) -> Vec<Mat2> {
        recover_vector_gradient(self.medium.mesh(), u)
    }

    fn coupling_rate(&self, qp: &QuadPoint, now: &[Mat2], before: &[Mat2], u_now: &[f64], u_before: &[f64]) -> Mat2 {
        let mesh = self.medium.mesh();
        let dt = self.problem.grid.dt;
        match self.problem.coupling_gradient {
            CouplingGradient::Recovered => {
                let t = mesh.triangles()[qp.element];
                let mut g = Mat2::ZERO;
                for a in 0..3 {
                    g += (now[t[a]] - before[t[a]]) * qp.bary[a];
                }
                g * (1.0 / dt)
            }
            CouplingGradient::Elementwise => {
                let a = mesh.vector_gradient(u_now, qp.element);
                let b = mesh.vector_gradient(u_before, qp.element);
                Mat2([
                    [(a[0][0] - b[0][0]) / dt, (a[0][1] - b[0][1]) / dt],
                    [(a[1][0] - b[1][0]) / dt, (a[1][1] - b[1][1]) / dt],
                ])
            }
        }
    }

    /// Shared form of the two temperature schemes:
    /// `(S/τ + θ_d K) T_new = (S/τ − (1−θ_d) K) T_old + Joule − coupling + f_T(t_src)`,
    /// coefficients from `coefs`, coupling temperature from `hat`.
    fn temperature_solve(
        &mut self,
        coefs: &CoefficientSample<'_>,
        hat: &[f64],
        tau: f64,
        implicit: f64,
        t_src: f64,
        t_new: f64,
    ) -> Result<Vec<f64>> {
        let mesh = self.medium.mesh();
        let mut mass = assemble_mass(mesh, &self.scalar, &ORDER2, |qp| coefs.at(mesh, qp).s);
        let stiff = assemble_diffusion(mesh, &self.scalar, &ORDER2, |qp| coefs.at(mesh, qp).k)?;
        let old = &self.temperature;
        let mut b = mass.mul(old);
        b.iter_mut().for_each(|v| *v /= tau);
        if implicit < 1.0 {
            let kt = stiff.mul(old);
            for (v, k) in b.iter_mut().zip(kt) {
                *v -= (1.0 - implicit) * k;
            }
        }
        let phi = &self.potential;
        let reference = self.problem.reference_temperature;
        let coupling = self.problem.coupling;
        let heat = &self.problem.sources.heat;
        let (u_now, u_before) = (&self.displacement, &self.displacement_prev);
        let g_now = self.displacement_gradient(u_now);
        let g_before = self.displacement_gradient(u_before);
        let rhs = assemble_source(mesh, &ORDER2, |qp| {
            let c = coefs.at(mesh, qp);
            let gp = mesh.gradient(phi, qp.element);
            let joule = c.lambda_star.bilinear(gp, gp);
            let theta = coupling.resolve(mesh.interpolate(hat, qp.element, qp.bary), reference);
            let rate = self.coupling_rate(qp, &g_now, &g_before, u_now, u_before);
            let mut coupled = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    coupled += c.beta_star.0[i][j] * rate.0[i][j];
                }
            }
            joule - theta * coupled + heat.eval(qp.x, t_src)
        });
        for (v, r) in b.iter_mut().zip(rhs) {
            *v += r;
        }
        let inv_tau = 1.0 / tau;
        mass.values_mut().iter_mut().for_each(|v| *v *= inv_tau);
        mass.add_scaled(implicit, &stiff);
        let fixed = self.boundary_scalar(&self.problem.boundary.temperature, t_new);
        let guess = self.temperature.clone();
        let x = self.solve(&mass, &b, false, &fixed, &guess)?;
        self.stats.temperature_solves += 1;
        Ok(x)
    }

    /// Half-step temperature by a backward-Euler step of length `Δt/2` with coefficients at `T⁰`.
    pub fn bootstrap_half_step(&mut self) -> Result<()> {
        let dt = self.problem.grid.dt;
        let temps = self.temperature.clone();
        let coefs = self.sample(&temps);
        self.half_temperature = self.temperature_solve(&coefs, &temps, 0.5 * dt, 1.0, 0.5 * dt, 0.5 * dt)?;
        Ok(())
    }

    /// Potential at `t_{m+1/2}` with coefficients at the half-step temperature.
    pub fn step_potential(&mut self) -> Result<()> {
        let t = self.problem.grid.time(self.step as f64 + 0.5);
        let hat = self.half_temperature.clone();
        let coefs = self.sample(&hat);
        self.potential = self.potential_solve(&coefs, t)?;
        Ok(())
    }

    /// Temperature at `t_{m+1}`; returns it without advancing the state.
    pub fn step_temperature(&mut self) -> Result<Vec<f64>> {
        let g = self.problem.grid;
        let hat = self.half_temperature.clone();
        let coefs = self.sample(&hat);
        let m = self.step as f64;
        self.temperature_solve(&coefs, &hat, g.dt, 0.5, g.time(m + 0.5), g.time(m + 1.0))
    }

    /// Displacement at `t_{m+1}` for the given new temperature; returns it without advancing.
    pub fn step_displacement(&mut self, new_temperature: &[f64]) -> Result<Vec<f64>> {
        let g = self.problem.grid;
        let t_new = g.time(self.step as f64 + 1.0);
        let coefs = self.sample(new_temperature);
        let mesh = self.medium.mesh();
        let inv = 1.0 / (g.dt * g.dt);
        let mut a = assemble_mass(mesh, &self.vector, &ORDER2, |qp| coefs.at(mesh, qp).rho * inv);
        let history: Vec<f64> = self
            .displacement
            .iter()
            .zip(&self.displacement_prev)
            .map(|(u, p)| 2.0 * u - p)
            .collect();
        let mut b = a.mul(&history);
        let stiff = assemble_elasticity(mesh, &self.vector, &ORDER2, |qp| coefs.at(mesh, qp).c)?;
        a.add_scaled(1.0, &stiff);
        let reference = self.problem.reference_temperature;
        let thermal = assemble_vector_flux(mesh, &ORDER2, |qp| {
            let c = coefs.at(mesh, qp);
            let dt = mesh.interpolate(new_temperature, qp.element, qp.bary) - reference;
            c.beta * dt
        });
        let force = &self.problem.sources.force;
        let load = assemble_vector_source(mesh, &ORDER2, |qp| {
            [force[0].eval(qp.x, t_new), force[1].eval(qp.x, t_new)]
        });
        for ((v, th), f) in b.iter_mut().zip(thermal).zip(load) {
            *v += th + f;
        }
        let mut fixed = vec![0.0; 2 * mesh.node_count()];
        self.impose_vector(&mut fixed, t_new);
        let guess = self.displacement.clone();
        let x = self.solve(&a, &b, true, &fixed, &guess)?;
        self.stats.displacement_solves += 1;
        Ok(x)
    }

    /// One full step `m → m+1`.
    pub fn advance(&mut self) -> Result<()> {
        let step = self.step;
        let inner = |s: &mut Self| -> Result<()> {
            if s.step > 0 {
                s.half_temperature = s
                    .temperature
                    .iter()
                    .zip(&s.temperature_prev)
                    .map(|(t, p)| (3.0 * t - p) / 2.0)
                    .collect();
            }
            s.step_potential()?;
            let t_new = s.step_temperature()?;
            let u_new = s.step_displacement(&t_new)?;
            s.temperature_prev = core::mem::replace(&mut s.temperature, t_new);
            s.displacement_prev2 = core::mem::replace(&mut s.displacement_prev, core::mem::take(&mut s.displacement));
            s.displacement = u_new;
            s.step += 1;
            Ok(())
        };
        inner(self).map_err(|e| e.at_step(step))?;
        if self.temperature.iter().chain(&self.displacement).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("fields became non-finite".into()).at_step(step));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            time: self.time(),
            temperature: self.temperature.clone(),
            temperature_prev: self.temperature_prev.clone(),
            potential: self.potential.clone(),
            displacement: self.displacement.clone(),
            displacement_prev: self.displacement_prev.clone(),
            displacement_prev2: self.displacement_prev2.clone(),
        }
    }
}

/// Runs the whole schedule: initial potential, half-step bootstrap, then every step.
pub fn run<M: Medium>(medium: &M, problem: &Problem) -> Result<Trajectory> {
    run_with(medium, problem, |_| {})
}

/// [`run`] with a callback after every step, for progress reporting.
pub fn run_with<M: Medium>(medium: &M, problem: &Problem, mut on_step: impl FnMut(&Snapshot)) -> Result<Trajectory> {
    let mut s = Stepper::new(medium, problem)?;
    s.solve_initial_potential().map_err(|e| e.at_step(0))?;
    s.bootstrap_half_step().map_err(|e| e.at_step(0))?;
    let stride = problem.snapshot_stride.max(1);
    let mut snapshots = vec![s.snapshot()];
    for _ in 0..problem.grid.steps {
        s.advance()?;
        if s.step % stride == 0 || s.step == problem.grid.steps {
            let snap = s.snapshot();
            on_step(&snap);
            snapshots.push(snap);
        }
    }
    Ok(Trajectory {
        grid: problem.grid,
        snapshots,
        stats: s.stats,
    })
}
