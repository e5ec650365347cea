//! Command-line harness: model rows, simulation rows, model-vs-simulation
//! sweeps and window-distribution dumps, all as CSV.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod cli;
pub mod config;
pub mod rows;
pub mod sweep;

pub use config::{SeedPolicy, SettingConfig, SweepSpec};
pub use sweep::{run_sweep, SweepOutcome};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TCPSR_OUT";

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("setting `{0}`: {1}")]
    Setting(String, #[source] tcpsr_core::Error),

    #[error(transparent)]
    Model(#[from] tcpsr_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}
