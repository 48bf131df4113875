//! The subcommands. Each one reads the configuration, does its stage and writes files under
//! the output directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use homs_core::cell::{cell_solve_count, CellDiscretization};
use homs_core::dns::{build_dns_mesh, run_dns};
use homs_core::homog::{build_table, mean_bounds, verify_identities, TemperatureTable};
use homs_core::macroscale::{run, HomogenizedMedium, Trajectory};
use homs_core::materials::DerivativeOrder;
use homs_core::mesh::{build_macro_mesh, build_unit_cell_mesh, Mesh, Phase};
use homs_core::metrics::{evolutive_errors, norm, ErrorSeries, Norm};
use homs_core::reconstruct::{Evaluator, Reconstruction};

use crate::archive::{load_archive, write_archive, Manifest, TemperatureTiming, FORMAT_VERSION};
use crate::config::{Geometry, SimulationConfig};
use crate::error::CliError;
use crate::exec::Parallel;
use crate::output::*;

/// Where a command reads and writes.
#[derive(Clone, Debug)]
pub struct Paths {
    pub out: PathBuf,
    pub archive: PathBuf,
}

impl Paths {
    pub fn resolve(config: &SimulationConfig, out: Option<PathBuf>, archive: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| config.output.directory.clone());
        let archive = archive.unwrap_or_else(|| out.join("archive"));
        Paths { out, archive }
    }

    pub fn macro_dir(&self) -> PathBuf {
        self.out.join("online")
    }

    pub fn dns_dir(&self) -> PathBuf {
        self.out.join("dns")
    }
}

pub const TRAJECTORY_BIN: &str = "trajectory.bin";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const ERRORS_CSV: &str = "errors.csv";

fn build(config: &SimulationConfig, exec: &Parallel) -> Result<TemperatureTable, CliError> {
    let law = config.material_law()?;
    let cell = build_unit_cell_mesh(&config.geometry.to_core(), config.mesh.cell_h)?;
    let mut disc = CellDiscretization::new(cell, config.cell_boundary())?;
    disc.options.max_iter = disc.options.max_iter.max(config.solver.max_iter);
    Ok(build_table(&disc, &law, &config.table_settings(), exec)?)
}

pub fn offline(config: &SimulationConfig, paths: &Paths) -> Result<Manifest, CliError> {
    let exec = Parallel::new();
    let before = cell_solve_count();
    let start = Instant::now();
    let table = build(config, &exec)?;
    let total_seconds = start.elapsed().as_secs_f64();
    let passes = exec.timings();
    let timings: Vec<TemperatureTiming> = table
        .temperatures
        .iter()
        .enumerate()
        .map(|(i, &t)| TemperatureTiming {
            temperature: t,
            first_order_seconds: passes[0][i],
            second_order_seconds: passes.get(1).map(|p| p[i]),
        })
        .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config_hash: config.offline_hash(),
        mesh_hash: crate::archive::mesh_hash(&table.mesh),
        law_hash: config.law_hash(),
        payload_sha256: String::new(),
        temperatures: table.temperatures.clone(),
        cell_nodes: table.mesh.node_count(),
        second_order: table.has_second_order(),
        cell_solves: cell_solve_count() - before,
        timings,
        total_seconds,
    };
    let manifest = write_archive(&paths.archive, &table, manifest)?;
    println!(
        "off-line: {} temperatures on a {}-node cell, {} cell solves, {:.2} s",
        manifest.temperatures.len(),
        manifest.cell_nodes,
        manifest.cell_solves,
        total_seconds
    );
    for t in &manifest.timings {
        match t.second_order_seconds {
            Some(s) => println!("  T = {:8.2}  first order {:.3} s  second order {:.3} s", t.temperature, t.first_order_seconds, s),
            None => println!("  T = {:8.2}  first order {:.3} s", t.temperature, t.first_order_seconds),
        }
    }
    println!("archive written to {}", paths.archive.display());
    Ok(manifest)
}

/// The mesh of the homogenized problem.
pub fn macro_mesh(config: &SimulationConfig) -> Result<Mesh, CliError> {
    if config.mesh.macro_on_dns_mesh {
        Ok(build_dns_mesh(&config.dns_config())?)
    } else {
        Ok(build_macro_mesh(config.mesh.macro_h)?)
    }
}

fn write_trajectory_files(
    dir: &Path,
    config: &SimulationConfig,
    mesh: &Mesh,
    traj: &Trajectory,
) -> Result<(), CliError> {
    write_text(&dir.join("config.json"), &config.to_json())?;
    save_trajectory(&dir.join(TRAJECTORY_BIN), traj)?;
    write_text(&dir.join(TRAJECTORY_CSV), &trajectory_csv(mesh, traj))?;
    if config.output.vtk {
        for snap in &traj.snapshots {
            write_snapshot_vtk(&dir.join(format!("step_{:06}.vtk", snap.step)), mesh, snap)?;
        }
    }
    Ok(())
}

fn reconstruction_vtk(path: &Path, mesh: &Mesh, rec: &Reconstruction) -> Result<(), CliError> {
    let sets = [("hom", &rec.homogenized), ("loms", &rec.first_order), ("homs", &rec.second_order)];
    let mut data = Vec::new();
    for (suffix, set) in &sets {
        data.push((format!("T_{suffix}"), &set.temperature, false));
        data.push((format!("Phi_{suffix}"), &set.potential, false));
        data.push((format!("U_{suffix}"), &set.displacement, true));
    }
    let fields: Vec<PointData<'_>> = data
        .iter()
        .map(|(name, v, vector)| {
            if *vector {
                PointData::Vector(name, v)
            } else {
                PointData::Scalar(name, v)
            }
        })
        .collect();
    write_text(path, &vtk_string(mesh, "multiscale reconstruction", &fields))
}

/// Summary of an on-line run.
#[derive(Clone, Copy, Debug)]
pub struct OnlineReport {
    pub cell_solves: usize,
    pub clamped_lookups: usize,
    pub reconstruction_clamps: usize,
}

pub fn online(config: &SimulationConfig, paths: &Paths) -> Result<OnlineReport, CliError> {
    let (_, table) = load_archive(&paths.archive, config)?;
    let before = cell_solve_count();
    let problem = config.problem()?;
    let mesh = macro_mesh(config)?;
    let start = Instant::now();
    let traj = run(&HomogenizedMedium { mesh: &mesh, table: &table }, &problem)?;
    println!(
        "on-line: {} macroscopic nodes, {} steps, {:.2} s, {} clamped lookups",
        mesh.node_count(),
        problem.grid.steps,
        start.elapsed().as_secs_f64(),
        traj.stats.clamped_lookups
    );
    let dir = paths.macro_dir();
    write_trajectory_files(&dir, config, &mesh, &traj)?;

    let fine = build_dns_mesh(&config.dns_config())?;
    let evaluator = Evaluator::new(&table, &mesh, fine.nodes(), config.epsilon)?;
    let rec = evaluator.evaluate(traj.last(), problem.grid.dt, false);
    if config.output.vtk {
        reconstruction_vtk(&dir.join("reconstruction.vtk"), &fine, &rec)?;
    }
    let cell_solves = cell_solve_count() - before;
    if cell_solves != 0 {
        return Err(CliError::Verification(format!(
            "the on-line stage performed {cell_solves} cell solves"
        )));
    }
    println!("reconstruction on {} fine nodes, {} clamped lookups", fine.node_count(), rec.clamped_lookups);
    Ok(OnlineReport {
        cell_solves,
        clamped_lookups: traj.stats.clamped_lookups,
        reconstruction_clamps: rec.clamped_lookups,
    })
}

pub fn dns(config: &SimulationConfig, paths: &Paths) -> Result<Trajectory, CliError> {
    let law = config.material_law()?;
    let problem = config.problem()?;
    let mesh = build_dns_mesh(&config.dns_config())?;
    let start = Instant::now();
    let traj = run_dns(&mesh, &law, &problem)?;
    let tmax = traj.last().temperature.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "DNS: {} nodes, {} steps, {:.2} s, final max temperature {tmax:.3}",
        mesh.node_count(),
        problem.grid.steps,
        start.elapsed().as_secs_f64()
    );
    if !tmax.is_finite() {
        return Err(CliError::Verification("the fine-scale solution is not finite".into()));
    }
    write_trajectory_files(&paths.dns_dir(), config, &mesh, &traj)?;
    Ok(traj)
}

pub fn errors(config: &SimulationConfig, paths: &Paths, vtk: bool) -> Result<ErrorSeries, CliError> {
    let (_, table) = load_archive(&paths.archive, config)?;
    let macro_traj = load_trajectory(&paths.macro_dir().join(TRAJECTORY_BIN))?;
    let dns_traj = load_trajectory(&paths.dns_dir().join(TRAJECTORY_BIN))?;
    let grid = config.time_grid()?;
    for (name, t) in [("on-line", &macro_traj), ("DNS", &dns_traj)] {
        if t.grid != grid {
            return Err(CliError::Config {
                path: "time".into(),
                message: format!("the stored {name} trajectory used a different time grid"),
            });
        }
    }
    let macro_mesh = macro_mesh(config)?;
    let fine = build_dns_mesh(&config.dns_config())?;
    if fine.node_count() != dns_traj.last().temperature.len() || macro_mesh.node_count() != macro_traj.last().temperature.len() {
        return Err(CliError::Config {
            path: "mesh".into(),
            message: "the stored trajectories do not match the configured meshes".into(),
        });
    }
    let series = evolutive_errors(&fine, &dns_traj, &macro_mesh, &macro_traj, &table, config.epsilon, &Parallel::new())?;
    write_text(&paths.out.join(ERRORS_CSV), &series.to_csv())?;
    if let Some(row) = series.last() {
        println!("errors at t = {:.4}:", series.times.last().copied().unwrap_or(0.0));
        for (name, v) in homs_core::metrics::COLUMNS.iter().zip(row) {
            println!("  {name:10} {v:.4e}");
        }
    }
    if vtk {
        if let Some(&step) = series.steps.last() {
            let r = dns_traj.at_step(step).expect("series steps come from the DNS");
            let m = macro_traj.at_step(step).expect("series steps come from the macro run");
            let rec = Evaluator::new(&table, &macro_mesh, fine.nodes(), config.epsilon)?.evaluate(m, grid.dt, false);
            let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
            let mut owned = Vec::new();
            for (suffix, set) in [("hom", &rec.homogenized), ("loms", &rec.first_order), ("homs", &rec.second_order)] {
                owned.push((format!("T_err_{suffix}"), diff(&set.temperature, &r.temperature), false));
                owned.push((format!("Phi_err_{suffix}"), diff(&set.potential, &r.potential), false));
                owned.push((format!("U_err_{suffix}"), diff(&set.displacement, &r.displacement), true));
            }
            let data: Vec<PointData<'_>> = owned
                .iter()
                .map(|(n, v, vector)| if *vector { PointData::Vector(n, v) } else { PointData::Scalar(n, v) })
                .collect();
            write_text(
                &paths.out.join(format!("errors_step_{step:06}.vtk")),
                &vtk_string(&fine, "pointwise errors", &data),
            )?;
        }
    }
    Ok(series)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Cell,
    Macro,
    Dns,
}

/// Writes one of the configured meshes in the plain-text mesh format.
pub fn export_mesh(config: &SimulationConfig, kind: MeshKind, path: &Path) -> Result<Mesh, CliError> {
    let mesh = match kind {
        MeshKind::Cell => build_unit_cell_mesh(&config.geometry.to_core(), config.mesh.cell_h)?,
        MeshKind::Macro => macro_mesh(config)?,
        MeshKind::Dns => build_dns_mesh(&config.dns_config())?,
    };
    write_text(path, &crate::meshio::mesh_to_text(&mesh))?;
    println!("{} nodes, {} triangles written to {}", mesh.node_count(), mesh.triangle_count(), path.display());
    Ok(mesh)
}

/// Outcome of one verification check; `None` when the check does not apply.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: Option<bool>,
    pub detail: String,
}

const IDENTITY_TOL: f64 = 1e-8;
const LAMINATE_TOL: f64 = 1e-3;
const DEGENERACY_TOL: f64 = 1e-10;

pub fn verify_table(config: &SimulationConfig, table: &TemperatureTable) -> Vec<Check> {
    let law = &table.law;
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    let mut positive = true;
    for e in &table.entries {
        let r = verify_identities(&e.hom);
        worst = worst.max(r.lambda_deviation).max(r.beta_deviation);
        positive &= r.min_k_eigenvalue > 0.0 && r.min_lambda_eigenvalue > 0.0 && r.min_c_eigenvalue > 0.0;
    }
    checks.push(Check {
        name: "identities",
        passed: Some(worst <= IDENTITY_TOL && positive),
        detail: format!("max relative deviation {worst:.2e}, positive definite: {positive}"),
    });

    let mut within = true;
    for (t, e) in table.temperatures.iter().zip(&table.entries) {
        let m = law.properties(Phase::Matrix, *t, DerivativeOrder::Value);
        let i = law.properties(Phase::Inclusion, *t, DerivativeOrder::Value);
        for (mat, a, b) in [(e.hom.k_hat, m.k, i.k), (e.hom.lambda_hat, m.lambda, i.lambda), (e.hom.beta_hat, m.beta, i.beta)] {
            let [lo, hi] = mat.symmetric_eigenvalues();
            let slack = 1e-10 * a.abs().max(b.abs());
            within &= lo >= a.min(b) - slack && hi <= a.max(b) + slack;
        }
    }
    checks.push(Check {
        name: "bounds",
        passed: Some(within),
        detail: format!("eigenvalues within the phase range at {} temperatures: {within}", table.temperatures.len()),
    });

    checks.push(match config.geometry {
        Geometry::Stripe { axis, .. } => {
            let mut worst: f64 = 0.0;
            for (t, e) in table.temperatures.iter().zip(&table.entries) {
                let km = law.properties(Phase::Matrix, *t, DerivativeOrder::Value).k;
                let ki = law.properties(Phase::Inclusion, *t, DerivativeOrder::Value).k;
                let (harmonic, arithmetic) = mean_bounds(&table.mesh, km, ki);
                let across = e.hom.k_hat.get(axis, axis);
                let along = e.hom.k_hat.get(1 - axis, 1 - axis);
                worst = worst
                    .max(((across - harmonic) / harmonic).abs())
                    .max(((along - arithmetic) / arithmetic).abs());
            }
            Check {
                name: "laminate",
                passed: Some(worst <= LAMINATE_TOL),
                detail: format!("max relative deviation from the layer means {worst:.2e}"),
            }
        }
        Geometry::Disk { .. } => Check {
            name: "laminate",
            passed: None,
            detail: "not a layered geometry".into(),
        },
    });

    checks.push(if law.matrix == law.inclusion {
        let mut worst: f64 = 0.0;
        for e in &table.entries {
            let mut all = e.first.entries();
            if let Some(s) = &e.second {
                all.extend(s.entries());
            }
            for (_, comps, f) in all {
                worst = worst
                    .max(norm(&table.mesh, f, comps, Norm::L2))
                    .max(norm(&table.mesh, f, comps, Norm::H1Semi));
            }
        }
        let mut coeff: f64 = 0.0;
        for (t, e) in table.temperatures.iter().zip(&table.entries) {
            let p = law.properties(Phase::Matrix, *t, DerivativeOrder::Value);
            coeff = coeff
                .max(((e.hom.k_hat.get(0, 0) - p.k) / p.k).abs())
                .max(((e.hom.k_hat.get(1, 1) - p.k) / p.k).abs())
                .max(e.hom.k_hat.get(0, 1).abs() / p.k)
                .max(((e.hom.rho_hat - p.rho) / p.rho).abs());
        }
        Check {
            name: "degeneracy",
            passed: Some(worst <= DEGENERACY_TOL && coeff <= IDENTITY_TOL),
            detail: format!("max cell function norm {worst:.2e}, coefficient deviation {coeff:.2e}"),
        }
    } else {
        Check {
            name: "degeneracy",
            passed: None,
            detail: "the phases differ".into(),
        }
    });
    checks
}

/// Checks the archived table, or a freshly built one when no archive exists.
pub fn verify(config: &SimulationConfig, paths: &Paths) -> Result<Vec<Check>, CliError> {
    let table = if paths.archive.join(crate::archive::MANIFEST).exists() {
        load_archive(&paths.archive, config)?.1
    } else {
        println!("no archive at {}, building the table", paths.archive.display());
        build(config, &Parallel::new())?
    };
    let checks = verify_table(config, &table);
    for c in &checks {
        let tag = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!("[{tag}] {}: {}", c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| c.passed == Some(false)).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
