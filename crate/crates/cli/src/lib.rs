//! Scenario-driven front end for the barium photoionization loading models.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::ScenarioFile;
pub use error::CliError;
use output::{Format, Writer};
use scenarios::{Context, Scenario};

#[derive(Debug, Parser)]
#[command(name = "batrap", version, about = "Photoionization loading of barium ion traps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce a figure or table, writing data files and a JSON summary.
    Run {
        scenario: Scenario,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Monte Carlo sample count (overrides run.samples).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// List every key of a scenario file in SI units and flag violations.
    Validate { path: PathBuf },
    /// Print the isotope registry as JSON.
    Registry,
    /// Print one JSON record with the Monte Carlo Doppler width.
    Doppler {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

pub fn load_config(path: Option<&Path>) -> Result<ScenarioFile, CliError> {
    match path {
        None => ScenarioFile::parse(config::DEFAULT_CONFIG),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            ScenarioFile::parse(&text)
        }
    }
}

/// Runs a command, writing human-readable output to `stdout`.
pub fn execute(cmd: &Command, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            scenario,
            config,
            seed,
            out,
            samples,
            format,
        } => {
            let file = load_config(config.as_deref())?;
            let ctx = Context::new(&file, *seed, *samples)?;
            let mut writer = Writer::new(out, *format)?;
            scenarios::run(&ctx, *scenario, &mut writer)?;
            for p in &writer.written {
                writeln!(stdout, "{}", p.display())?;
            }
        }
        Command::Validate { path } => {
            let file = load_config(Some(path))?;
            let report = file.report();
            write!(stdout, "{report}")?;
            if let Some(v) = report.violations.first() {
                return Err(CliError::Config(format!("{} violation(s), first: {v}", report.violations.len())));
            }
        }
        Command::Registry => {
            let bytes = output::to_json_bytes(&batrap_core::constants::registry())?;
            stdout.write_all(&bytes)?;
        }
        Command::Doppler { config, seed, samples } => {
            let file = load_config(config.as_deref())?;
            let ctx = Context::new(&file, *seed, *samples)?;
            let bytes = output::to_json_bytes(&scenarios::doppler_record(&ctx)?)?;
            stdout.write_all(&bytes)?;
        }
    }
    Ok(())
}

/// Caps the global thread pool from `BATRAP_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BATRAP_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BATRAP_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}
