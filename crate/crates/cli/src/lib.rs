//! Command-line front end for `eprsteer-core`: reports, figure datasets,
//! homodyne simulation, noise-cancellation checks and parameter sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_report, cmd_revive, cmd_simulate, cmd_sweep, Revival, Simulation, SweepOutput,
};
pub use config::{CommonArgs, FigureName, Format, RunConfig, StateSource, SweepArg};
pub use error::{CliError, CliResult};
pub use figures::{cmd_figure, Dataset};

#[derive(Debug, Parser)]
#[command(
    name = "eprsteer",
    version,
    about = "Gaussian EPR steering through lossy and noisy channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Steering, Reid, PPT and purity of a state after a channel.
    Report,
    /// Write the datasets for one of the standard figures into --out (a directory).
    Figure {
        #[arg(value_enum)]
        name: FigureName,
    },
    /// Sample homodyne data, reconstruct and report over repeated trials.
    Simulate,
    /// Compare a noisy channel with its noise-cancelled counterpart.
    Revive,
    /// Sweep one or two parameters.
    Sweep,
}

const DEFAULT_FIGURE_DIR: &str = "figures";

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::io(format!("writing {}", p.display()), e))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("writing stdout", e)),
    }
}

/// Writes each dataset into `dir`, creating it if needed, and returns the
/// paths written.
pub fn write_datasets(dir: &Path, sets: &[Dataset]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    sets.iter()
        .map(|d| {
            let p = dir.join(&d.name);
            std::fs::write(&p, &d.contents)
                .map_err(|e| CliError::io(format!("writing {}", p.display()), e))?;
            Ok(p)
        })
        .collect()
}

/// Runs one command with a resolved configuration.
pub fn execute(command: Command, cfg: &RunConfig) -> CliResult<()> {
    let out = cfg.out.as_deref();
    match command {
        Command::Report => emit(out, &commands::render_report(&cmd_report(cfg)?, cfg.format)),
        Command::Simulate => emit(
            out,
            &commands::render_simulation(&cmd_simulate(cfg)?, cfg.format)?,
        ),
        Command::Revive => emit(
            out,
            &commands::render_revival(&cmd_revive(cfg)?, cfg.format),
        ),
        Command::Sweep => emit(
            out,
            &commands::render_sweep(cfg, &cmd_sweep(cfg)?, cfg.format),
        ),
        Command::Figure { name } => {
            let dir = out.unwrap_or(Path::new(DEFAULT_FIGURE_DIR));
            for p in write_datasets(dir, &cmd_figure(name, cfg)?)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    execute(cli.command, &RunConfig::resolve(&cli.common)?)
}
