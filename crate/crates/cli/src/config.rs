//! JSON simulation configuration.

use std::path::{Path, PathBuf};

use homs_core::cell::{CellBoundary, CouplingTemperature};
use homs_core::dns::{periods_per_side, DnsConfig};
use homs_core::expr::SpaceTimeFn;
use homs_core::fem::SolveOptions;
use homs_core::homog::TableSettings;
use homs_core::macroscale::{BoundaryData, CouplingGradient, InitialData, Problem, Sources, TimeGrid};
use homs_core::materials::{MaterialLaw, PhaseLaw, PlaneMode, ScalarLaw};
use homs_core::mesh::PhaseGeometry;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every field except `schema_version` may be omitted; missing values are taken from
/// [`SimulationConfig::example`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub schema_version: u32,
    pub geometry: Geometry,
    pub material: Material,
    /// Period of the microstructure; must be `1/n`.
    pub epsilon: f64,
    pub mesh: MeshSizes,
    pub time: TimeSettings,
    pub sources: SourceSpec,
    pub boundary: BoundarySpec,
    pub initial: InitialSpec,
    /// Stress-free temperature.
    pub reference_temperature: f64,
    pub table: TableSpec,
    pub switches: Switches,
    pub solver: SolverSpec,
    pub output: OutputSpec,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self::example()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Disk { center: [f64; 2], radius: f64 },
    Stripe { axis: usize, lo: f64, hi: f64 },
}

impl Geometry {
    pub fn to_core(&self) -> PhaseGeometry {
        match *self {
            Geometry::Disk { center, radius } => PhaseGeometry::Disk { center, radius },
            Geometry::Stripe { axis, lo, hi } => PhaseGeometry::Stripe { axis, lo, hi },
        }
    }
}

/// Either `"example"` for the built-in composite or two explicit phase laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Material {
    Named(String),
    Custom(Box<CustomMaterial>),
}

impl Default for Material {
    fn default() -> Self {
        Material::Named("example".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMaterial {
    pub matrix: PhaseSpec,
    pub inclusion: PhaseSpec,
    pub range: [f64; 2],
    #[serde(default = "default_kappa0")]
    pub kappa0: f64,
}

fn default_kappa0() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub rho: LawSpec,
    pub c: LawSpec,
    pub k: LawSpec,
    pub lambda: LawSpec,
    pub beta: LawSpec,
    pub young: LawSpec,
    pub poisson: LawSpec,
}

/// A number, `{"a": .., "b": ..}` for `a + bT`, or a table of `(T, value)` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Constant(f64),
    Affine { a: f64, b: f64 },
    Tabulated { temperatures: Vec<f64>, values: Vec<f64> },
}

impl LawSpec {
    fn to_core(&self) -> Result<ScalarLaw, homs_core::Error> {
        match self {
            LawSpec::Constant(v) => Ok(ScalarLaw::constant(*v)),
            LawSpec::Affine { a, b } => Ok(ScalarLaw::Affine { a: *a, b: *b }),
            LawSpec::Tabulated { temperatures, values } => ScalarLaw::tabulated(temperatures.clone(), values.clone()),
        }
    }
}

impl PhaseSpec {
    fn to_core(&self) -> Result<PhaseLaw, homs_core::Error> {
        Ok(PhaseLaw {
            rho: self.rho.to_core()?,
            c: self.c.to_core()?,
            k: self.k.to_core()?,
            lambda: self.lambda.to_core()?,
            beta: self.beta.to_core()?,
            young: self.young.to_core()?,
            poisson: self.poisson.to_core()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSizes {
    /// Element size of the structured macroscopic mesh.
    pub macro_h: f64,
    /// Element size of the unit-cell mesh used for the cell problems.
    pub cell_h: f64,
    /// Element size of the cell template tiled into the fine mesh, relative to one period.
    pub dns_cell_h: f64,
    /// Solve the homogenized problem on the fine mesh instead of the macroscopic one.
    pub macro_on_dns_mesh: bool,
}

impl Default for MeshSizes {
    fn default() -> Self {
        MeshSizes {
            macro_h: 0.02,
            cell_h: 0.1,
            dns_cell_h: 0.1,
            macro_on_dns_mesh: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSettings {
    pub dt: f64,
    pub final_time: f64,
    pub snapshot_stride: usize,
}

impl Default for TimeSettings {
    fn default() -> Self {
        TimeSettings {
            dt: 1e-3,
            final_time: 1.0,
            snapshot_stride: 100,
        }
    }
}

/// A constant or an expression in `x1`, `x2`, `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Number(f64),
    Expression(String),
}

impl ValueSpec {
    fn to_core(&self) -> Result<SpaceTimeFn, homs_core::Error> {
        match self {
            ValueSpec::Number(v) => Ok(SpaceTimeFn::Constant(*v)),
            ValueSpec::Expression(s) => SpaceTimeFn::parse(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub heat: ValueSpec,
    pub charge: ValueSpec,
    pub force: [ValueSpec; 2],
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            heat: ValueSpec::Number(20000.0),
            charge: ValueSpec::Number(200.0),
            force: [ValueSpec::Number(5000.0), ValueSpec::Number(5000.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySpec {
    pub temperature: ValueSpec,
    pub potential: ValueSpec,
    pub displacement: [ValueSpec; 2],
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            temperature: ValueSpec::Number(300.0),
            potential: ValueSpec::Number(0.0),
            displacement: [ValueSpec::Number(0.0), ValueSpec::Number(0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub temperature: ValueSpec,
    pub displacement: [ValueSpec; 2],
    pub velocity: [ValueSpec; 2],
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            temperature: ValueSpec::Number(300.0),
            displacement: [ValueSpec::Number(0.0), ValueSpec::Number(0.0)],
            velocity: [ValueSpec::Number(0.0), ValueSpec::Number(0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSpec {
    pub range: [f64; 2],
    pub count: usize,
    pub second_order: bool,
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            range: [250.0, 950.0],
            count: 15,
            second_order: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CellBoundarySpec {
    #[default]
    Periodic,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSpec {
    /// Coupling factor at the local temperature, as the schemes are written.
    #[default]
    Local,
    /// Coupling factor at the stress-free reference temperature.
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GradientSpec {
    #[default]
    Recovered,
    Elementwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlaneSpec {
    #[default]
    Strain,
    Stress,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Switches {
    #[serde(default)]
    pub cell_boundary: CellBoundarySpec,
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub coupling_gradient: GradientSpec,
    #[serde(default)]
    pub plane: PlaneSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        SolverSpec {
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    /// Write VTK files for snapshots and reconstructions.
    pub vtk: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: PathBuf::from("output"),
            vtk: true,
        }
    }
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl SimulationConfig {
    /// The example configuration: disk inclusion with about 20% volume fraction, ε = 1/10,
    /// Δt = 1e-3 up to t = 1, about 5000 macroscopic and 870 cell elements.
    pub fn example() -> Self {
        SimulationConfig {
            schema_version: SCHEMA_VERSION,
            geometry: Geometry::Disk {
                center: [0.5, 0.5],
                radius: 0.25,
            },
            material: Material::default(),
            epsilon: 0.1,
            mesh: MeshSizes::default(),
            time: TimeSettings::default(),
            sources: SourceSpec::default(),
            boundary: BoundarySpec::default(),
            initial: InitialSpec::default(),
            reference_temperature: 300.0,
            table: TableSpec::default(),
            switches: Switches::default(),
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid("", format!("not valid JSON: {e}")))?;
        if value.get("schema_version").is_none() {
            return Err(invalid("schema_version", "missing; this build reads version 1"));
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks everything that can be checked without running a solver.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.geometry
            .to_core()
            .validate()
            .map_err(|e| invalid("geometry", e.to_string()))?;
        periods_per_side(self.epsilon).map_err(|e| invalid("epsilon", e.to_string()))?;
        for (name, h) in [
            ("mesh.macro_h", self.mesh.macro_h),
            ("mesh.cell_h", self.mesh.cell_h),
            ("mesh.dns_cell_h", self.mesh.dns_cell_h),
        ] {
            if !(h > 0.0 && h <= 1.0) {
                return Err(invalid(name, format!("element size {h} must lie in (0, 1]")));
            }
        }
        self.time_grid()?;
        if self.time.snapshot_stride == 0 {
            return Err(invalid("time.snapshot_stride", "must be at least 1"));
        }
        if self.table.count < 2 {
            return Err(invalid("table.count", "the table needs at least two temperatures"));
        }
        let law = self.material_law()?;
        let [lo, hi] = self.table.range;
        if !(lo < hi) || !law.in_range(lo) || !law.in_range(hi) {
            return Err(invalid(
                "table.range",
                format!("[{lo}, {hi}] must be increasing and inside the material range {:?}", law.range),
            ));
        }
        law.audit(32).map_err(|e| invalid("material", e.to_string()))?;
        self.problem()?;
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(invalid("solver", "tolerance and iteration limit must be positive"));
        }
        Ok(())
    }

    pub fn material_law(&self) -> Result<MaterialLaw, CliError> {
        let mut law = match &self.material {
            Material::Named(name) if name == "example" => MaterialLaw::example_composite(),
            Material::Named(name) => {
                return Err(invalid(
                    "material",
                    format!("unknown material '{name}', expected \"example\" or explicit phase laws"),
                ))
            }
            Material::Custom(m) => MaterialLaw {
                matrix: m.matrix.to_core().map_err(|e| invalid("material.matrix", e.to_string()))?,
                inclusion: m.inclusion.to_core().map_err(|e| invalid("material.inclusion", e.to_string()))?,
                range: m.range,
                kappa0: m.kappa0,
                plane: PlaneMode::Strain,
            },
        };
        law.plane = match self.switches.plane {
            PlaneSpec::Strain => PlaneMode::Strain,
            PlaneSpec::Stress => PlaneMode::Stress,
        };
        Ok(law)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        let t = &self.time;
        if !(t.dt > 0.0 && t.final_time > 0.0) {
            return Err(invalid("time", "dt and final_time must be positive"));
        }
        let steps = (t.final_time / t.dt).round();
        if (steps * t.dt - t.final_time).abs() > 1e-9 * t.final_time {
            return Err(invalid(
                "time.final_time",
                format!("{} is not an integer multiple of dt = {}", t.final_time, t.dt),
            ));
        }
        TimeGrid::new(t.dt, steps as usize).map_err(|e| invalid("time", e.to_string()))
    }

    pub fn cell_boundary(&self) -> CellBoundary {
        match self.switches.cell_boundary {
            CellBoundarySpec::Periodic => CellBoundary::Periodic,
            CellBoundarySpec::Dirichlet => CellBoundary::Dirichlet,
        }
    }

    pub fn coupling(&self) -> CouplingTemperature {
        match self.switches.coupling {
            CouplingSpec::Local => CouplingTemperature::Local,
            CouplingSpec::Reference => CouplingTemperature::Reference,
        }
    }

    pub fn table_settings(&self) -> TableSettings {
        let mut s = TableSettings::equidistant(self.table.range, self.table.count, self.reference_temperature);
        s.coupling = self.coupling();
        s.second_order = self.table.second_order;
        s
    }

    pub fn dns_config(&self) -> DnsConfig {
        DnsConfig {
            epsilon: self.epsilon,
            geometry: self.geometry.to_core(),
            cell_h: self.mesh.dns_cell_h,
        }
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let f = |path: &str, v: &ValueSpec| v.to_core().map_err(|e| invalid(path, e.to_string()));
        Ok(Problem {
            sources: Sources {
                heat: f("sources.heat", &self.sources.heat)?,
                charge: f("sources.charge", &self.sources.charge)?,
                force: [
                    f("sources.force[0]", &self.sources.force[0])?,
                    f("sources.force[1]", &self.sources.force[1])?,
                ],
            },
            boundary: BoundaryData {
                temperature: f("boundary.temperature", &self.boundary.temperature)?,
                potential: f("boundary.potential", &self.boundary.potential)?,
                displacement: [
                    f("boundary.displacement[0]", &self.boundary.displacement[0])?,
                    f("boundary.displacement[1]", &self.boundary.displacement[1])?,
                ],
            },
            initial: InitialData {
                temperature: f("initial.temperature", &self.initial.temperature)?,
                displacement: [
                    f("initial.displacement[0]", &self.initial.displacement[0])?,
                    f("initial.displacement[1]", &self.initial.displacement[1])?,
                ],
                velocity: [
                    f("initial.velocity[0]", &self.initial.velocity[0])?,
                    f("initial.velocity[1]", &self.initial.velocity[1])?,
                ],
            },
            reference_temperature: self.reference_temperature,
            coupling: self.coupling(),
            coupling_gradient: match self.switches.coupling_gradient {
                GradientSpec::Recovered => CouplingGradient::Recovered,
                GradientSpec::Elementwise => CouplingGradient::Elementwise,
            },
            grid: self.time_grid()?,
            snapshot_stride: self.time.snapshot_stride,
            solver: SolveOptions {
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
            },
        })
    }

    /// Hash of the material laws and the plane mode.
    pub fn law_hash(&self) -> String {
        let key = serde_json::json!({ "material": self.material, "plane": self.switches.plane });
        hex_digest(key.to_string().as_bytes())
    }

    /// Hash of every setting the off-line stage depends on. An archive built from a
    /// configuration is only accepted by configurations with the same hash.
    pub fn offline_hash(&self) -> String {
        let key = serde_json::json!({
            "schema_version": self.schema_version,
            "geometry": self.geometry,
            "material": self.material,
            "cell_h": self.mesh.cell_h,
            "table": self.table,
            "reference_temperature": self.reference_temperature,
            "cell_boundary": self.switches.cell_boundary,
            "coupling": self.switches.coupling,
            "plane": self.switches.plane,
        });
        hex_digest(key.to_string().as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
