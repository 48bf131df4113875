//! Command-line front end: configuration, archives, output files and the subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
mod binio;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod meshio;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::SimulationConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "homs", version, about = "Multiscale simulation of temperature-dependent thermo-electro-mechanical composites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Simulation configuration (JSON).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory; defaults to the one in the configuration.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Off-line archive directory; defaults to `<out>/archive`.
    #[arg(short, long)]
    pub archive: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cell problems over the temperature table and write the archive.
    Offline(Common),
    /// Run the homogenized problem from an archive and reconstruct the fine-scale fields.
    Online(Common),
    /// Run the fine-scale reference simulation.
    Dns(Common),
    /// Compare the on-line reconstructions with the reference run.
    Errors {
        #[command(flatten)]
        common: Common,
        /// Also write pointwise errors at the last common step.
        #[arg(long)]
        vtk: bool,
    },
    /// Check the effective coefficients against exact identities and bounds.
    Verify(Common),
    /// Export a mesh in the plain-text mesh format.
    Mesh {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cell")]
        kind: MeshArg,
        /// Destination file.
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the example configuration.
    ExampleConfig,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum MeshArg {
    Cell,
    Macro,
    Dns,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, cmd) = match &cli.command {
        Command::ExampleConfig => {
            println!("{}", SimulationConfig::example().to_json());
            return Ok(());
        }
        Command::Offline(c) | Command::Online(c) | Command::Dns(c) | Command::Verify(c) => (c, &cli.command),
        Command::Errors { common, .. } | Command::Mesh { common, .. } => (common, &cli.command),
    };
    let config = SimulationConfig::load(&common.config)?;
    let paths = commands::Paths::resolve(&config, common.out.clone(), common.archive.clone());
    match cmd {
        Command::Offline(_) => commands::offline(&config, &paths).map(drop),
        Command::Online(_) => commands::online(&config, &paths).map(drop),
        Command::Dns(_) => commands::dns(&config, &paths).map(drop),
        Command::Errors { vtk, .. } => commands::errors(&config, &paths, *vtk).map(drop),
        Command::Verify(_) => commands::verify(&config, &paths).map(drop),
        Command::Mesh { kind, output, .. } => {
            let kind = match kind {
                MeshArg::Cell => commands::MeshKind::Cell,
                MeshArg::Macro => commands::MeshKind::Macro,
                MeshArg::Dns => commands::MeshKind::Dns,
            };
            commands::export_mesh(&config, kind, output).map(drop)
        }
        Command::ExampleConfig => unreachable!(),
    }
}
