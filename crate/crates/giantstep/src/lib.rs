//! Experiment harness for `giantstep-core`: TOML configs, sweeps over
//! `(d, n, p)` cells and seeds, CSV/JSON/NPY outputs and verification of the
//! stored results.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

pub use config::{Cell, ExperimentConfig, ExperimentKind};
pub use output::{Manifest, Table};

/// Failures surfaced by the CLI. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure in {cell}: {message}")]
    Numerical { cell: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Missing(_) => 2,
            CliError::Io(_) => 1,
            CliError::Numerical { .. } => 3,
        }
    }
}
