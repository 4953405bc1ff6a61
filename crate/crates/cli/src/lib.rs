//! Command-line front end: config handling, experiment runners and output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod units;

use thiserror::Error;

/// Errors mapped to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected configuration or input (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// A simulation or fit failed (exit 3).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<smc_core::Error> for CliError {
    fn from(e: smc_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
