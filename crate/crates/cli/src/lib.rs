//! Pipeline orchestration: config parsing, the worker pool, subcommand
//! implementations, and CSV/SVG emission.

pub mod config;
pub mod pipeline;
pub mod pool;
pub mod svg;
pub mod table;

use std::path::PathBuf;

use mbl_core::chain::ChainError;
use mbl_core::dataset::DatasetError;
use mbl_core::linalg::LinalgError;
use mbl_core::nn::NnError;
use mbl_core::scaling::ScalingError;
use mbl_core::spectrum::SpectrumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io(_) => 4,
            CliError::Divergence(_) => 5,
        }
    }

    pub fn missing_artifact(path: &PathBuf, produced_by: &str) -> CliError {
        CliError::Io(format!(
            "missing {}; run `mbl {produced_by}` first",
            path.display()
        ))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::OverCapacity { .. } => CliError::Capacity(e.to_string()),
            SpectrumError::Solver(LinalgError::NoConvergence(_)) => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::SitesOutOfRange { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Spectrum(s) => s.into(),
            DatasetError::Chain(c) => c.into(),
            DatasetError::Io(io) => CliError::Io(io.to_string()),
            DatasetError::InvalidScale(_) => CliError::Config(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Divergence { .. } | NnError::NonFinite(_) => {
                CliError::Divergence(e.to_string())
            }
            NnError::Io(io) => CliError::Io(io.to_string()),
            NnError::BadMagic | NnError::UnsupportedVersion(_) | NnError::Truncated { .. } => {
                CliError::Io(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::InvalidGrid(_) => CliError::Config(e.to_string()),
            other => CliError::Divergence(other.to_string()),
        }
    }
}
