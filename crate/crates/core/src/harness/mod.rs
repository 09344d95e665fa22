//! Command-line interface, experiment configuration, result persistence,
//! and figure emission.
//!
//! Error discipline: configuration problems (malformed documents, bad
//! flags, unusable inputs) exit with code 2; resource-guard violations
//! (enumerations or sweep budgets beyond the built-in limits) exit with
//! code 3; success exits 0.

pub mod cli;
pub mod config;
pub mod plot;
pub mod store;

pub use config::{ConfigError, ExperimentConfig};
pub use plot::{render_svg_from_csv, PlotError};
pub use store::{run_experiment, ResultStore, RunOutcome};

use thiserror::Error;

use crate::clusters::ClusterError;
use crate::disorder::DisorderError;
use crate::estimators::EstimatorError;
use crate::exact::ExactError;
use crate::lattice::LatticeError;
use crate::mcmc::McmcError;
use crate::thermo::ThermoError;

/// Unified harness error with an exit-code class.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed or inconsistent configuration or input (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// Resource-guard violation (exit 3).
    #[error("guard violated: {0}")]
    Guard(String),
    /// Filesystem failure (exit 2).
    #[error("io error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Guard(_) => 3,
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(msg) => HarnessError::Config(msg),
            ConfigError::Guard(msg) => HarnessError::Guard(msg),
        }
    }
}

impl From<ExactError> for HarnessError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::TooLarge(_) => HarnessError::Guard(e.to_string()),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<McmcError> for HarnessError {
    fn from(e: McmcError) -> Self {
        match e {
            McmcError::ResourceLimit(_) => HarnessError::Guard(e.to_string()),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<EstimatorError> for HarnessError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Mcmc(inner) => inner.into(),
            EstimatorError::Exact(inner) => inner.into(),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<PlotError> for HarnessError {
    fn from(e: PlotError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<LatticeError> for HarnessError {
    fn from(e: LatticeError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<DisorderError> for HarnessError {
    fn from(e: DisorderError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<ClusterError> for HarnessError {
    fn from(e: ClusterError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<ThermoError> for HarnessError {
    fn from(e: ThermoError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
