//! Command failures and their process exit codes.

use std::io;

use chartpulse::analytics::AnalyticsError;
use chartpulse::cache::CacheError;
use chartpulse::clustering::ClusterError;
use chartpulse::estimation::EstimationError;
use chartpulse::ingest::IngestError;
use chartpulse::simulation::SimulationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),
    /// A computation produced no usable number.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::ImpossibleObservation { .. } => CliError::Numerical(e.to_string()),
            EstimationError::InvalidJumpTime { .. }
            | EstimationError::InvalidConfig(_)
            | EstimationError::InvalidWindow { .. } => CliError::Usage(e.to_string()),
            EstimationError::InsufficientData { .. } | EstimationError::Model(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::RankOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::ZeroClusters | ClusterError::MinDaysTooSmall => {
                CliError::Usage(e.to_string())
            }
            ClusterError::TooFewPoints { .. } | ClusterError::TooFewFeatures { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::InvalidHorizon(_) => CliError::Usage(e.to_string()),
            SimulationError::InvalidMean(_) => CliError::Numerical(e.to_string()),
        }
    }
}
