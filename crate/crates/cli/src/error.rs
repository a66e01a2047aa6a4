use ggmsel_core::Error as CoreError;
use thiserror::Error;

use crate::ingest::IngestError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidPenalty(_)
            | CoreError::InvalidPrior(_)
            | CoreError::InvalidConfig(_)
            | CoreError::TooLarge { .. }
            | CoreError::GuardViolated(_)
            | CoreError::InvalidEdge(..) => CliError::Config(msg),
            CoreError::NotSymmetric { .. } | CoreError::DimensionMismatch { .. } => CliError::Data(msg),
            CoreError::NotPositiveDefinite { .. }
            | CoreError::SolverDiverged { .. }
            | CoreError::EmptyModelSet
            | CoreError::DegenerateProposal => CliError::Numeric(msg),
        }
    }
}
