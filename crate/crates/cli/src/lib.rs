//! Command-line front end for the quantum battery simulator: JSON
//! configuration, single runs, parameter sweeps, drive comparisons and
//! self-tests.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("selftest failed: {0}")]
    SelftestFailed(String),
}

impl From<qbattery_core::Error> for CliError {
    fn from(e: qbattery_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
            CliError::SelftestFailed(_) => 3,
        }
    }
}
