use thiserror::Error;

/// Failure modes shared by every numeric routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid penalty: {0}")]
    InvalidPenalty(f64),
    #[error("invalid prior: {0}")]
    InvalidPrior(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("graph space too large to enumerate ({pairs} vertex pairs, limit {limit})")]
    TooLarge { pairs: usize, limit: usize },
    #[error("graphical lasso did not converge after {iterations} sweeps (kkt residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("no regular model to normalize")]
    EmptyModelSet,
    #[error("oracle guard violated: {0}")]
    GuardViolated(&'static str),
    #[error("importance proposal is degenerate: hessian not positive definite")]
    DegenerateProposal,
    #[error("edge ({0}, {1}) is not a valid vertex pair")]
    InvalidEdge(usize, usize),
}

pub type Result<T> = core::result::Result<T, Error>;
