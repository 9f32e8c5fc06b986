//! Batch experiment runner for `klflow`: single runs, parameter sweeps,
//! oracle checks and rate comparison tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_check, cmd_rates, cmd_run, cmd_sweep, RunReport};
pub use config::ExperimentConfig;

/// Process exit status, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitCode {
    Ok = 0,
    CheckFailed = 1,
    ConfigError = 2,
    Diverged = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::ConfigError
    }
}
