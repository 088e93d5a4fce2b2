//! Batch experiment runner for `bargmann-lens`.
//!
//! Exit status: 0 when every configured check passes, 1 when a check fails,
//! 2 for an invalid configuration (nothing is written), 3 when a pipeline
//! fails numerically (the partial report is written).

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{ConfigError, ExperimentConfig, Overrides};
pub use experiments::{run, Experiment, Outcome};
pub use output::{RunReport, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERIC_FAILURE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_INVALID_CONFIG,
            CliError::Io(_) => EXIT_NUMERIC_FAILURE,
        }
    }
}

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Passed => EXIT_OK,
        Status::Failed => EXIT_CHECKS_FAILED,
        Status::Error => EXIT_NUMERIC_FAILURE,
    }
}

/// Runs one experiment with at most `threads` workers (`0` = all cores) and
/// packages the result.
pub fn execute(experiment: Experiment, cfg: &ExperimentConfig, threads: usize) -> RunReport {
    let outcome = bargmann_lens::par::with_threads(threads, || run(experiment, cfg));
    let status = match (&outcome.failure, outcome.report.passed()) {
        (Some(_), _) => Status::Error,
        (None, true) => Status::Passed,
        (None, false) => Status::Failed,
    };
    RunReport {
        experiment: experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_sha256: output::config_hash(cfg),
        status,
        error: outcome.failure,
        config: cfg.clone(),
        report: outcome.report,
    }
}

/// Execute and write outputs to the configured directory; returns the exit
/// status.
pub fn execute_and_write(experiment: Experiment, cfg: &ExperimentConfig, threads: usize) -> Result<(RunReport, PathBuf), CliError> {
    let run = execute(experiment, cfg, threads);
    let dir = cfg.output.dir.clone();
    output::write_run(&dir, &run)?;
    Ok((run, dir))
}
