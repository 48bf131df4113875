//! Unit-cell corrector problems at a fixed macroscopic temperature.
//!
//! Every problem has the form `∫ K ∇X · ∇v = ∫ s v + ∫ g · ∇v` on the unit cell, with `K`
//! one of the conductivity `k`, the electrical conductivity `λ` or the elasticity tensor `c`
//! of the phase at the table temperature. The right-hand sides of the second-order problems
//! that carry macroscopic derivatives of temperature-dependent quantities are written in
//! factored form: each such corrector is tabulated per direction `s` and contracted with
//! `∂T₀/∂x_s` during reconstruction.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_diffusion, assemble_elasticity, assemble_flux, assemble_source, assemble_vector_flux,
    assemble_vector_source, for_each_quad_point, solve_spd, Constraints, CsrMatrix, QuadPoint,
    Reduction, SolveOptions, Space, ORDER2,
};
use crate::homog::HomogenizedCoefficients;
use crate::materials::{DerivativeOrder, MaterialLaw, PhaseProperties};
use crate::mesh::Mesh;
use crate::tensor::{Mat2, Tensor4, Vec2};

static CELL_SOLVES: AtomicUsize = AtomicUsize::new(0);

/// Number of cell-problem linear solves performed by this process so far.
pub fn cell_solve_count() -> usize {
    CELL_SOLVES.load(Ordering::Relaxed)
}

/// Boundary treatment of the cell problems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellBoundary {
    /// 1-periodic correctors with zero cell average.
    #[default]
    Periodic,
    /// Homogeneous Dirichlet data on the cell boundary.
    Dirichlet,
}

/// Which temperature multiplies the thermo-mechanical coupling terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CouplingTemperature {
    /// The local temperature (the table temperature off-line, the current iterate on-line).
    #[default]
    Local,
    /// The fixed reference temperature.
    Reference,
}

impl CouplingTemperature {
    pub fn resolve(self, local: f64, reference: f64) -> f64 {
        match self {
            CouplingTemperature::Local => local,
            CouplingTemperature::Reference => reference,
        }
    }
}

pub type Field = Vec<f64>;

fn name1(prefix: &str, a: usize) -> String {
    format!("{prefix}_{}", a + 1)
}

fn name2(prefix: &str, a: usize, b: usize) -> String {
    format!("{prefix}_{}{}", a + 1, b + 1)
}

fn name3(prefix: &str, a: usize, b: usize, c: usize) -> String {
    format!("{prefix}_{}{}{}", a + 1, b + 1, c + 1)
}

/// First-order correctors at one temperature. Vector fields are interleaved by node.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderCellSet {
    pub temperature: f64,
    /// Thermal correctors `M_α`.
    pub m: [Field; 2],
    /// Electric correctors `H_α`.
    pub h: [Field; 2],
    /// Elastic correctors `N^α_{·m}`, indexed `[m][α]`.
    pub n: [[Field; 2]; 2],
    /// Thermo-elastic corrector `P`.
    pub p: Field,
}

impl FirstOrderCellSet {
    pub fn zeros(nodes: usize, temperature: f64) -> Self {
        let s = || vec![0.0; nodes];
        let v = || vec![0.0; 2 * nodes];
        FirstOrderCellSet {
            temperature,
            m: [s(), s()],
            h: [s(), s()],
            n: [[v(), v()], [v(), v()]],
            p: v(),
        }
    }

    /// `(name, components, values)` of every corrector.
    pub fn entries(&self) -> Vec<(String, usize, &Field)> {
        let mut out = Vec::new();
        for a in 0..2 {
            out.push((name1("M", a), 1, &self.m[a]));
        }
        for a in 0..2 {
            out.push((name1("H", a), 1, &self.h[a]));
        }
        for m in 0..2 {
            for a in 0..2 {
                out.push((name2("N", m, a), 2, &self.n[m][a]));
            }
        }
        out.push(("P".into(), 2, &self.p));
        out
    }

    pub fn entries_mut(&mut self) -> Vec<(String, usize, &mut Field)> {
        let FirstOrderCellSet { m, h, n, p, .. } = self;
        let mut out = Vec::new();
        for (a, f) in m.iter_mut().enumerate() {
            out.push((name1("M", a), 1, f));
        }
        for (a, f) in h.iter_mut().enumerate() {
            out.push((name1("H", a), 1, f));
        }
        for (mi, row) in n.iter_mut().enumerate() {
            for (a, f) in row.iter_mut().enumerate() {
                out.push((name2("N", mi, a), 2, f));
            }
        }
        out.push(("P".into(), 2, p));
        out
    }

    /// `wa * a + wb * b` field by field.
    pub fn combine(a: &Self, wa: f64, b: &Self, wb: f64, temperature: f64) -> Self {
        let mut out = a.clone();
        out.temperature = temperature;
        let src = b.entries();
        for ((_, _, dst), (_, _, other)) in out.entries_mut().into_iter().zip(src) {
            for (x, y) in dst.iter_mut().zip(other.iter()) {
                *x = wa * *x + wb * y;
            }
        }
        out
    }
}

/// Second-order correctors at one temperature.
///
/// Index conventions: `[a1][a2]` for two-index families; `r`, `z` are `[α][s]`; `n2`, `d` are
/// `[m][a1][a2]`; `a` is `[m][a1][s]`; `b` is `[s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderCellSet {
    pub temperature: f64,
    /// Temperature used for the coupling factor in `Q` and `J`.
    pub coupling_temperature: f64,
    pub q: Field,
    pub m2: [[Field; 2]; 2],
    pub r: [[Field; 2]; 2],
    pub o: [[Field; 2]; 2],
    pub g: [[Field; 2]; 2],
    pub j: [[Field; 2]; 2],
    pub h2: [[Field; 2]; 2],
    pub z: [[Field; 2]; 2],
    pub w: [[Field; 2]; 2],
    pub n2: [[[Field; 2]; 2]; 2],
    pub f: [Field; 2],
    pub x: [Field; 2],
    pub a: [[[Field; 2]; 2]; 2],
    pub b: [Field; 2],
    pub c: [Field; 2],
    pub d: [[[Field; 2]; 2]; 2],
}

type Pair = [[Field; 2]; 2];
type Triple = [[[Field; 2]; 2]; 2];

impl SecondOrderCellSet {
    pub fn zeros(nodes: usize, temperature: f64, coupling_temperature: f64) -> Self {
        let s = || vec![0.0; nodes];
        let v = || vec![0.0; 2 * nodes];
        let sp = || [[s(), s()], [s(), s()]];
        let vp = || [[v(), v()], [v(), v()]];
        SecondOrderCellSet {
            temperature,
            coupling_temperature,
            q: s(),
            m2: sp(),
            r: sp(),
            o: sp(),
            g: sp(),
            j: sp(),
            h2: sp(),
            z: sp(),
            w: sp(),
            n2: [vp(), vp()],
            f: [v(), v()],
            x: [v(), v()],
            a: [vp(), vp()],
            b: [v(), v()],
            c: [v(), v()],
            d: [vp(), vp()],
        }
    }

    pub fn entries(&self) -> Vec<(String, usize, &Field)> {
        let mut out = Vec::new();
        out.push(("Q".into(), 1, &self.q));
        let pairs: [(&str, &Pair); 8] = [
            ("M2", &self.m2),
            ("R", &self.r),
            ("O", &self.o),
            ("G", &self.g),
            ("J", &self.j),
            ("H2", &self.h2),
            ("Z", &self.z),
            ("W", &self.w),
        ];
        for (p, fam) in pairs {
            for a in 0..2 {
                for b in 0..2 {
                    out.push((name2(p, a, b), 1, &fam[a][b]));
                }
            }
        }
        let triples: [(&str, &Triple); 3] = [("N2", &self.n2), ("A", &self.a), ("D", &self.d)];
        let singles: [(&str, &[Field; 2]); 4] =
            [("F", &self.f), ("X", &self.x), ("B", &self.b), ("C", &self.c)];
        for (p, fam) in triples {
            for m in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out.push((name3(p, m, a, b), 2, &fam[m][a][b]));
                    }
                }
            }
        }
        for (p, fam) in singles {
            for a in 0..2 {
                out.push((name1(p, a), 2, &fam[a]));
            }
        }
        out
    }

    pub fn entries_mut(&mut self) -> Vec<(String, usize, &mut Field)> {
        let SecondOrderCellSet {
            q,
            m2,
            r,
            o,
            g,
            j,
            h2,
            z,
            w,
            n2,
            f,
            x,
            a,
            b,
            c,
            d,
            ..
        } = self;
        let mut out = Vec::new();
        out.push(("Q".into(), 1, q));
        let pairs: [(&str, &mut Pair); 8] = [
            ("M2", m2),
            ("R", r),
            ("O", o),
            ("G", g),
            ("J", j),
            ("H2", h2),
            ("Z", z),
            ("W", w),
        ];
        for (p, fam) in pairs {
            for (ai, row) in fam.iter_mut().enumerate() {
                for (bi, fld) in row.iter_mut().enumerate() {
                    out.push((name2(p, ai, bi), 1, fld));
                }
            }
        }
        let triples: [(&str, &mut Triple); 3] = [("N2", n2), ("A", a), ("D", d)];
        let singles: [(&str, &mut [Field; 2]); 4] = [("F", f), ("X", x), ("B", b), ("C", c)];
        for (p, fam) in triples {
            for (mi, plane) in fam.iter_mut().enumerate() {
                for (ai, row) in plane.iter_mut().enumerate() {
                    for (bi, fld) in row.iter_mut().enumerate() {
                        out.push((name3(p, mi, ai, bi), 2, fld));
                    }
                }
            }
        }
        for (p, fam) in singles {
            for (ai, fld) in fam.iter_mut().enumerate() {
                out.push((name1(p, ai), 2, fld));
            }
        }
        out
    }

    pub fn combine(a: &Self, wa: f64, b: &Self, wb: f64, temperature: f64) -> Self {
        let mut out = a.clone();
        out.temperature = temperature;
        out.coupling_temperature = wa * a.coupling_temperature + wb * b.coupling_temperature;
        let src = b.entries();
        for ((_, _, dst), (_, _, other)) in out.entries_mut().into_iter().zip(src) {
            for (x, y) in dst.iter_mut().zip(other.iter()) {
                *x = wa * *x + wb * y;
            }
        }
        out
    }
}

/// Phase coefficients at the table temperature and their temperature derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseCoefficients {
    pub value: PhaseProperties,
    pub derivative: PhaseProperties,
    pub c: Tensor4,
    pub dc: Tensor4,
}

impl PhaseCoefficients {
    pub fn new(law: &MaterialLaw, phase: crate::mesh::Phase, t: f64) -> Self {
        PhaseCoefficients {
            value: law.properties(phase, t, DerivativeOrder::Value),
            derivative: law.properties(phase, t, DerivativeOrder::First),
            c: law.elasticity(phase, t, DerivativeOrder::Value),
            dc: law.elasticity(phase, t, DerivativeOrder::First),
        }
    }
}

/// Constrained cell operators at one temperature.
#[derive(Clone, Debug)]
pub struct CellOperators {
    pub temperature: f64,
    pub phases: [PhaseCoefficients; 2],
    k: CsrMatrix,
    lambda: CsrMatrix,
    c: CsrMatrix,
}

impl CellOperators {
    #[inline]
    pub fn at(&self, qp: &QuadPoint) -> &PhaseCoefficients {
        &self.phases[qp.phase.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Operator {
    Thermal,
    Electric,
}

/// Unit-cell mesh with its function spaces and boundary constraints.
#[derive(Clone, Debug)]
pub struct CellDiscretization {
    mesh: Mesh,
    boundary: CellBoundary,
    scalar: Space,
    vector: Space,
    scalar_reduction: Reduction,
    vector_reduction: Reduction,
    lumped: Vec<f64>,
    pub options: SolveOptions,
}

impl CellDiscretization {
    pub fn new(mesh: Mesh, boundary: CellBoundary) -> Result<Self> {
        let scalar = Space::scalar(&mesh);
        let vector = Space::vector(&mesh);
        let (sc, vc) = match boundary {
            CellBoundary::Periodic => (Constraints::periodic(&mesh, 1)?, Constraints::periodic(&mesh, 2)?),
            CellBoundary::Dirichlet => (Constraints::boundary(&mesh, 1), Constraints::boundary(&mesh, 2)),
        };
        let scalar_reduction = Reduction::new(scalar.pattern(), sc);
        let vector_reduction = Reduction::new(vector.pattern(), vc);
        let lumped = mesh.lumped_mass();
        Ok(CellDiscretization {
            mesh,
            boundary,
            scalar,
            vector,
            scalar_reduction,
            vector_reduction,
            lumped,
            options: SolveOptions {
                tol: 1e-12,
                max_iter: 100_000,
            },
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn boundary(&self) -> CellBoundary {
        self.boundary
    }

    pub fn operators(&self, law: &MaterialLaw, t0: f64) -> Result<CellOperators> {
        let phases = [
            PhaseCoefficients::new(law, crate::mesh::Phase::Matrix, t0),
            PhaseCoefficients::new(law, crate::mesh::Phase::Inclusion, t0),
        ];
        let mesh = &self.mesh;
        let k = assemble_diffusion(mesh, &self.scalar, &ORDER2, |qp| {
            Mat2::diag(phases[qp.phase.index()].value.k)
        })?;
        let lambda = assemble_diffusion(mesh, &self.scalar, &ORDER2, |qp| {
            Mat2::diag(phases[qp.phase.index()].value.lambda)
        })?;
        let c = assemble_elasticity(mesh, &self.vector, &ORDER2, |qp| phases[qp.phase.index()].c)?;
        Ok(CellOperators {
            temperature: t0,
            phases,
            k: self.scalar_reduction.reduce_matrix(&k),
            lambda: self.scalar_reduction.reduce_matrix(&lambda),
            c: self.vector_reduction.reduce_matrix(&c),
        })
    }

    fn solve(&self, matrix: &CsrMatrix, mut load: Vec<f64>, components: usize, name: &str) -> Result<Field> {
        let reduction = if components == 1 {
            &self.scalar_reduction
        } else {
            &self.vector_reduction
        };
        if self.boundary == CellBoundary::Periodic {
            // Remove the constant mode so the singular periodic problem stays consistent.
            project_out_constants(&mut load, &self.lumped, components);
        }
        let rhs = reduction.constraints().fold_load(&load);
        let mut x = vec![0.0; rhs.len()];
        CELL_SOLVES.fetch_add(1, Ordering::Relaxed);
        solve_spd(matrix, &rhs, &mut x, &self.options).map_err(|e| e.in_cell_problem(name))?;
        let zeros = vec![0.0; load.len()];
        let mut out = reduction.constraints().expand(&x, &zeros);
        if self.boundary == CellBoundary::Periodic {
            subtract_mean(&mut out, &self.lumped, components);
        }
        Ok(out)
    }

    fn scalar_problem(
        &self,
        ops: &CellOperators,
        op: Operator,
        name: &str,
        source: impl Fn(&QuadPoint) -> f64,
        flux: impl Fn(&QuadPoint) -> Vec2,
        check: bool,
    ) -> Result<Field> {
        let matrix = match op {
            Operator::Thermal => &ops.k,
            Operator::Electric => &ops.lambda,
        };
        if check {
            let mut integral = 0.0;
            let mut norm = 0.0;
            for_each_quad_point(&self.mesh, &ORDER2, |qp| {
                let s = source(qp);
                integral += s * qp.weight;
                norm += s.abs() * qp.weight;
            });
            check_compatible(name, integral.abs(), norm, diagonal_scale(matrix))?;
        }
        let mut load = assemble_source(&self.mesh, &ORDER2, source);
        for (l, f) in load.iter_mut().zip(assemble_flux(&self.mesh, &ORDER2, flux)) {
            *l += f;
        }
        self.solve(matrix, load, 1, name)
    }

    fn vector_problem(
        &self,
        ops: &CellOperators,
        name: &str,
        source: impl Fn(&QuadPoint) -> Vec2,
        flux: impl Fn(&QuadPoint) -> Mat2,
        check: bool,
    ) -> Result<Field> {
        if check {
            let mut integral = [0.0; 2];
            let mut norm = 0.0;
            for_each_quad_point(&self.mesh, &ORDER2, |qp| {
                let s = source(qp);
                integral[0] += s[0] * qp.weight;
                integral[1] += s[1] * qp.weight;
                norm += (s[0].abs() + s[1].abs()) * qp.weight;
            });
            check_compatible(name, integral[0].abs() + integral[1].abs(), norm, diagonal_scale(&ops.c))?;
        }
        let mut load = assemble_vector_source(&self.mesh, &ORDER2, source);
        for (l, f) in load.iter_mut().zip(assemble_vector_flux(&self.mesh, &ORDER2, flux)) {
            *l += f;
        }
        self.solve(&ops.c, load, 2, name)
    }

    /// Solves the four first-order families at `t0`.
    pub fn solve_first_order(&self, law: &MaterialLaw, t0: f64) -> Result<FirstOrderCellSet> {
        let ops = self.operators(law, t0)?;
        self.solve_first_order_with(&ops)
    }

    pub fn solve_first_order_with(&self, ops: &CellOperators) -> Result<FirstOrderCellSet> {
        let nodes = self.mesh.node_count();
        let mut out = FirstOrderCellSet::zeros(nodes, ops.temperature);
        let none = |_: &QuadPoint| 0.0;
        for a in 0..2 {
            out.m[a] = self.scalar_problem(
                ops,
                Operator::Thermal,
                &name1("M", a),
                none,
                |qp| unit(a, -ops.at(qp).value.k),
                false,
            )?;
            out.h[a] = self.scalar_problem(
                ops,
                Operator::Electric,
                &name1("H", a),
                none,
                |qp| unit(a, -ops.at(qp).value.lambda),
                false,
            )?;
        }
        for m in 0..2 {
            for a in 0..2 {
                out.n[m][a] = self.vector_problem(
                    ops,
                    &name2("N", m, a),
                    |_| [0.0; 2],
                    |qp| {
                        let c = &ops.at(qp).c;
                        Mat2([
                            [-c.get(0, 0, m, a), -c.get(0, 1, m, a)],
                            [-c.get(1, 0, m, a), -c.get(1, 1, m, a)],
                        ])
                    },
                    false,
                )?;
            }
        }
        out.p = self.vector_problem(
            ops,
            "P",
            |_| [0.0; 2],
            |qp| Mat2::diag(ops.at(qp).value.beta),
            false,
        )?;
        Ok(out)
    }

    /// Solves the sixteen second-order families at the temperature of `first`.
    ///
    /// `d_first` and `d_hom` are temperature derivatives of the first-order correctors and of
    /// the homogenized coefficients at the same temperature. `theta` multiplies the coupling
    /// terms of `Q` and `J`.
    pub fn solve_second_order(
        &self,
        law: &MaterialLaw,
        first: &FirstOrderCellSet,
        hom: &HomogenizedCoefficients,
        d_first: &FirstOrderCellSet,
        d_hom: &HomogenizedCoefficients,
        theta: f64,
    ) -> Result<SecondOrderCellSet> {
        let ops = self.operators(law, first.temperature)?;
        self.solve_second_order_with(&ops, first, hom, d_first, d_hom, theta)
    }

    pub fn solve_second_order_with(
        &self,
        ops: &CellOperators,
        first: &FirstOrderCellSet,
        hom: &HomogenizedCoefficients,
        d_first: &FirstOrderCellSet,
        d_hom: &HomogenizedCoefficients,
        theta: f64,
    ) -> Result<SecondOrderCellSet> {
        let mesh = &self.mesh;
        let nodes = mesh.node_count();
        let mut out = SecondOrderCellSet::zeros(nodes, ops.temperature, theta);
        let grad = |f: &Field, qp: &QuadPoint| mesh.gradient(f, qp.element);
        let vgrad = |f: &Field, qp: &QuadPoint| mesh.vector_gradient(f, qp.element);
        let val = |f: &Field, qp: &QuadPoint| mesh.interpolate(f, qp.element, qp.bary);
        let vval = |f: &Field, qp: &QuadPoint| mesh.interpolate_vector(f, qp.element, qp.bary);
        let div = |f: &Field, qp: &QuadPoint| {
            let g = vgrad(f, qp);
            g[0][0] + g[1][1]
        };
        let zero_flux = |_: &QuadPoint| [0.0; 2];
        let zero_vflux = |_: &QuadPoint| Mat2::ZERO;
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let (m1, h1, n1, p1) = (&first.m, &first.h, &first.n, &first.p);

        out.q = self.scalar_problem(
            ops,
            Operator::Thermal,
            "Q",
            |qp| {
                let ph = ops.at(qp).value;
                -(ph.rho * ph.c - hom.s_hat + theta * ph.beta * div(p1, qp))
            },
            zero_flux,
            true,
        )?;

        for a1 in 0..2 {
            for a2 in 0..2 {
                out.m2[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Thermal,
                    &name2("M2", a1, a2),
                    |qp| {
                        let k = ops.at(qp).value.k;
                        -(hom.k_hat.get(a1, a2) - k * delta(a1, a2) - k * grad(&m1[a2], qp)[a1])
                    },
                    |qp| unit(a1, -ops.at(qp).value.k * val(&m1[a2], qp)),
                    true,
                )?;

                // α = a1, s = a2
                let (al, s) = (a1, a2);
                out.r[al][s] = self.scalar_problem(
                    ops,
                    Operator::Thermal,
                    &name2("R", al, s),
                    |qp| {
                        let pc = ops.at(qp);
                        let (k, dk) = (pc.value.k, pc.derivative.k);
                        -(d_hom.k_hat.get(s, al)
                            - dk * delta(s, al)
                            - dk * grad(&m1[al], qp)[s]
                            - k * grad(&d_first.m[al], qp)[s])
                    },
                    |qp| unit(s, -ops.at(qp).value.k * val(&d_first.m[al], qp)),
                    false,
                )?;

                out.o[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Thermal,
                    &name2("O", a1, a2),
                    |_| 0.0,
                    |qp| {
                        let dk = ops.at(qp).derivative.k;
                        let mv = val(&m1[a1], qp);
                        let gm = grad(&m1[a2], qp);
                        [
                            -mv * dk * (delta(0, a2) + gm[0]),
                            -mv * dk * (delta(1, a2) + gm[1]),
                        ]
                    },
                    false,
                )?;

                out.g[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Thermal,
                    &name2("G", a1, a2),
                    |qp| {
                        let l = ops.at(qp).value.lambda;
                        let g1 = grad(&h1[a1], qp);
                        let g2 = grad(&h1[a2], qp);
                        -(hom.lambda_hat_star.get(a1, a2)
                            - l * delta(a1, a2)
                            - l * g1[a2]
                            - l * g2[a1]
                            - l * (g1[0] * g2[0] + g1[1] * g2[1]))
                    },
                    zero_flux,
                    true,
                )?;

                out.j[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Thermal,
                    &name2("J", a1, a2),
                    |qp| {
                        let b = ops.at(qp).value.beta;
                        -(theta * b * delta(a1, a2) - theta * hom.beta_hat_star.get(a1, a2)
                            + theta * b * div(&n1[a1][a2], qp))
                    },
                    zero_flux,
                    true,
                )?;

                out.h2[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Electric,
                    &name2("H2", a1, a2),
                    |qp| {
                        let l = ops.at(qp).value.lambda;
                        -(hom.lambda_hat.get(a1, a2) - l * delta(a1, a2) - l * grad(&h1[a2], qp)[a1])
                    },
                    |qp| unit(a1, -ops.at(qp).value.lambda * val(&h1[a2], qp)),
                    true,
                )?;

                out.z[al][s] = self.scalar_problem(
                    ops,
                    Operator::Electric,
                    &name2("Z", al, s),
                    |qp| {
                        let pc = ops.at(qp);
                        let (l, dl) = (pc.value.lambda, pc.derivative.lambda);
                        -(d_hom.lambda_hat.get(s, al)
                            - dl * delta(s, al)
                            - dl * grad(&h1[al], qp)[s]
                            - l * grad(&d_first.h[al], qp)[s])
                    },
                    |qp| unit(s, -ops.at(qp).value.lambda * val(&d_first.h[al], qp)),
                    false,
                )?;

                out.w[a1][a2] = self.scalar_problem(
                    ops,
                    Operator::Electric,
                    &name2("W", a1, a2),
                    |_| 0.0,
                    |qp| {
                        let dl = ops.at(qp).derivative.lambda;
                        let mv = val(&m1[a1], qp);
                        let gh = grad(&h1[a2], qp);
                        [
                            -mv * dl * (delta(0, a2) + gh[0]),
                            -mv * dl * (delta(1, a2) + gh[1]),
                        ]
                    },
                    false,
                )?;
            }
        }

        for m in 0..2 {
            for a1 in 0..2 {
                for a2 in 0..2 {
                    out.n2[m][a1][a2] = self.vector_problem(
                        ops,
                        &name3("N2", m, a1, a2),
                        |qp| {
                            let c = &ops.at(qp).c;
                            let gn = vgrad(&n1[m][a2], qp);
                            let mut s = [0.0; 2];
                            for (i, si) in s.iter_mut().enumerate() {
                                let mut cg = 0.0;
                                for k in 0..2 {
                                    for j in 0..2 {
                                        cg += c.get(i, a1, k, j) * gn[k][j];
                                    }
                                }
                                *si = -(hom.c_hat.get(i, a1, m, a2) - c.get(i, a1, m, a2) - cg);
                            }
                            s
                        },
                        |qp| {
                            let c = &ops.at(qp).c;
                            let nv = vval(&n1[m][a2], qp);
                            tensor_flux(|i, j| {
                                -(c.get(i, j, 0, a1) * nv[0] + c.get(i, j, 1, a1) * nv[1])
                            })
                        },
                        true,
                    )?;

                    let s = a2;
                    out.a[m][a1][s] = self.vector_problem(
                        ops,
                        &name3("A", m, a1, s),
                        |qp| {
                            let pc = ops.at(qp);
                            let gn = vgrad(&n1[m][a1], qp);
                            let gdn = vgrad(&d_first.n[m][a1], qp);
                            let mut out = [0.0; 2];
                            for (i, oi) in out.iter_mut().enumerate() {
                                let mut t = 0.0;
                                for k in 0..2 {
                                    for l in 0..2 {
                                        t += pc.dc.get(i, s, k, l) * gn[k][l]
                                            + pc.c.get(i, s, k, l) * gdn[k][l];
                                    }
                                }
                                *oi = -(d_hom.c_hat.get(i, s, m, a1) - pc.dc.get(i, s, m, a1) - t);
                            }
                            out
                        },
                        |qp| {
                            let c = &ops.at(qp).c;
                            let dn = vval(&d_first.n[m][a1], qp);
                            tensor_flux(|i, j| -(c.get(i, j, 0, s) * dn[0] + c.get(i, j, 1, s) * dn[1]))
                        },
                        false,
                    )?;

                    out.d[m][a1][a2] = self.vector_problem(
                        ops,
                        &name3("D", m, a1, a2),
                        |_| [0.0; 2],
                        |qp| {
                            let dc = &ops.at(qp).dc;
                            let mv = val(&m1[a1], qp);
                            let gn = vgrad(&n1[m][a2], qp);
                            tensor_flux(|i, j| {
                                let mut t = dc.get(i, j, m, a2);
                                for k in 0..2 {
                                    for l in 0..2 {
                                        t += dc.get(i, j, k, l) * gn[k][l];
                                    }
                                }
                                -mv * t
                            })
                        },
                        false,
                    )?;
                }
            }
        }

        for a1 in 0..2 {
            out.f[a1] = self.vector_problem(
                ops,
                &name1("F", a1),
                |qp| {
                    let v = -(ops.at(qp).value.rho - hom.rho_hat);
                    unit(a1, v)
                },
                zero_vflux,
                true,
            )?;

            out.x[a1] = self.vector_problem(
                ops,
                &name1("X", a1),
                |qp| {
                    let pc = ops.at(qp);
                    let gp = vgrad(p1, qp);
                    let mut s = [0.0; 2];
                    for (i, si) in s.iter_mut().enumerate() {
                        let mut cp = 0.0;
                        for k in 0..2 {
                            for l in 0..2 {
                                cp += pc.c.get(i, a1, k, l) * gp[k][l];
                            }
                        }
                        *si = -(pc.value.beta * delta(i, a1) - hom.beta_hat.get(i, a1) - cp);
                    }
                    s
                },
                |qp| {
                    let pc = ops.at(qp);
                    let pv = vval(p1, qp);
                    let mv = val(&m1[a1], qp);
                    tensor_flux(|i, j| {
                        -(pc.c.get(i, j, 0, a1) * pv[0] + pc.c.get(i, j, 1, a1) * pv[1])
                            + pc.value.beta * delta(i, j) * mv
                    })
                },
                true,
            )?;

            let s = a1;
            out.b[s] = self.vector_problem(
                ops,
                &name1("B", s),
                |qp| {
                    let pc = ops.at(qp);
                    let gp = vgrad(p1, qp);
                    let gdp = vgrad(&d_first.p, qp);
                    let mut out = [0.0; 2];
                    for (i, oi) in out.iter_mut().enumerate() {
                        let mut t = 0.0;
                        for k in 0..2 {
                            for l in 0..2 {
                                t += pc.dc.get(i, s, k, l) * gp[k][l] + pc.c.get(i, s, k, l) * gdp[k][l];
                            }
                        }
                        *oi = -(pc.derivative.beta * delta(i, s) - d_hom.beta_hat.get(i, s) - t);
                    }
                    out
                },
                |qp| {
                    let c = &ops.at(qp).c;
                    let dp = vval(&d_first.p, qp);
                    tensor_flux(|i, j| -(c.get(i, j, 0, s) * dp[0] + c.get(i, j, 1, s) * dp[1]))
                },
                false,
            )?;

            out.c[a1] = self.vector_problem(
                ops,
                &name1("C", a1),
                |_| [0.0; 2],
                |qp| {
                    let pc = ops.at(qp);
                    let mv = val(&m1[a1], qp);
                    let gp = vgrad(p1, qp);
                    tensor_flux(|i, j| {
                        let mut t = pc.derivative.beta * delta(i, j);
                        for k in 0..2 {
                            for l in 0..2 {
                                t -= pc.dc.get(i, j, k, l) * gp[k][l];
                            }
                        }
                        mv * t
                    })
                },
                false,
            )?;
        }
        Ok(out)
    }
}

#[inline]
fn unit(axis: usize, v: f64) -> Vec2 {
    let mut out = [0.0; 2];
    out[axis] = v;
    out
}

#[inline]
fn tensor_flux(f: impl Fn(usize, usize) -> f64) -> Mat2 {
    Mat2([[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]])
}

/// `scale` is the largest diagonal entry of the operator; sources that are pure cancellation
/// noise on that scale pass.
fn check_compatible(name: &str, integral: f64, norm: f64, scale: f64) -> Result<()> {
    if norm > 0.0 && integral > 1e-8 * norm && integral > 1e-13 * scale {
        return Err(Error::Incompatible {
            problem: name.into(),
            integral,
            norm,
        });
    }
    Ok(())
}

fn diagonal_scale(a: &CsrMatrix) -> f64 {
    a.diagonal().iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn project_out_constants(load: &mut [f64], lumped: &[f64], components: usize) {
    let area: f64 = lumped.iter().sum();
    for i in 0..components {
        let total: f64 = load.iter().skip(i).step_by(components).sum();
        for (n, m) in lumped.iter().enumerate() {
            load[n * components + i] -= total * m / area;
        }
    }
}

fn subtract_mean(field: &mut [f64], lumped: &[f64], components: usize) {
    let area: f64 = lumped.iter().sum();
    for i in 0..components {
        let mean: f64 = lumped
            .iter()
            .enumerate()
            .map(|(n, m)| m * field[n * components + i])
            .sum::<f64>()
            / area;
        for n in 0..lumped.len() {
            field[n * components + i] -= mean;
        }
    }
}

/// Temperature derivative of first-order correctors at entry `index` of a sorted sequence:
/// centered differences inside, one-sided at the ends.
pub fn first_order_derivative(sets: &[FirstOrderCellSet], index: usize) -> Result<FirstOrderCellSet> {
    let (lo, hi) = derivative_stencil(sets.len(), index)?;
    let dt = sets[hi].temperature - sets[lo].temperature;
    Ok(FirstOrderCellSet::combine(
        &sets[hi],
        1.0 / dt,
        &sets[lo],
        -1.0 / dt,
        sets[index].temperature,
    ))
}

/// Temperature derivative of the first-order correctors at an arbitrary `t0`, interpolated
/// linearly between the nodal derivatives of the bracketing entries.
pub fn dt_of_first_order(sets: &[FirstOrderCellSet], t0: f64) -> Result<FirstOrderCellSet> {
    if sets.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two temperatures are needed for a derivative".into(),
        ));
    }
    let mut i = 0;
    while i + 2 < sets.len() && sets[i + 1].temperature <= t0 {
        i += 1;
    }
    let w = ((t0 - sets[i].temperature) / (sets[i + 1].temperature - sets[i].temperature)).clamp(0.0, 1.0);
    let a = first_order_derivative(sets, i)?;
    let b = first_order_derivative(sets, i + 1)?;
    Ok(FirstOrderCellSet::combine(&a, 1.0 - w, &b, w, t0))
}

pub(crate) fn derivative_stencil(len: usize, index: usize) -> Result<(usize, usize)> {
    if len < 2 || index >= len {
        return Err(Error::InvalidArgument(
            "at least two temperatures are needed for a derivative".into(),
        ));
    }
    Ok(if index == 0 {
        (0, 1)
    } else if index == len - 1 {
        (len - 2, len - 1)
    } else {
        (index - 1, index + 1)
    })
}
