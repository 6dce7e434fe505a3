//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulator operations.
#[derive(Debug, Error)]
pub enum SimError {
    /// An argument violated a precondition (empty grid, non-positive rate, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested measure or initialization window is empty for these
    /// parameters (splitting smaller than the combined broadening).
    #[error("empty window: {0}")]
    EmptyWindow(String),

    /// A nonlinear fit failed to converge; the payload carries residual
    /// diagnostics for the caller.
    #[error("fit failed to converge: {0}")]
    FitFailure(String),

    /// The data do not support the requested fit (e.g. unimodal histogram
    /// handed to a two-Gaussian fit).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Inversion has no solution in the physical domain.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem / output failures.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }
}
