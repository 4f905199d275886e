//! Command-line front end for `fracmix`.
//!
//! `fracmix <mode> --config <path> [--out <dir>] [--seed <n>]` reads a flat
//! `key = value` file, runs one experiment and writes `<mode>.csv` and
//! `<mode>_report.txt`. Exit status: 0 success, 1 failed `verify` checks,
//! 2 invalid input, 3 solver failure, 4 I/O failure.

pub mod config;
pub mod modes;
pub mod output;
pub mod problems;
pub mod verify;

use std::path::Path;

use config::{ExperimentConfig, Mode};
use modes::Artifacts;

/// Environment variable capping the worker pool; `0` or unset means automatic.
pub const THREADS_VAR: &str = "FRACMIX_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] fracmix::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) if e.is_validation() => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Short category used on the stderr line.
    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation",
            3 => "solver",
            _ => "io",
        }
    }
}

/// Run `cfg` and return its artifacts without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cfg.mode() {
        Mode::MlEval => modes::ml_eval(cfg),
        Mode::Ode => modes::ode(cfg),
        Mode::Pde => modes::pde(cfg),
        Mode::Decay => modes::decay(cfg),
        Mode::Compare => modes::compare(cfg),
        Mode::Verify => verify::verify(cfg),
    }
}

/// Parse, run and write artifacts into `out`.
pub fn run(mode: Mode, config: &Path, out: &Path, seed: Option<u64>) -> Result<Artifacts, CliError> {
    let cfg = ExperimentConfig::from_file(mode, config, seed)?;
    let artifacts = execute(&cfg)?;
    output::write_artifacts(out, mode.name(), &artifacts.csv, &artifacts.report)?;
    Ok(artifacts)
}

/// Build the global rayon pool from [`THREADS_VAR`].
pub fn configure_threads() -> Result<(), CliError> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_VAR}: not a non-negative integer: '{v}'")))?,
        Err(_) => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("{THREADS_VAR}: {e}")))?;
    }
    Ok(())
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide_cli {}
