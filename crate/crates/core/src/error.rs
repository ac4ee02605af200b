use std::fmt;

use crate::sdp::SolverStatus;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix dimension {requested} exceeds the configured limit {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("invalid {object}: {invariant} violated (residual {residual:.3e})")]
    Validation {
        object: &'static str,
        invariant: &'static str,
        residual: f64,
    },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("solver finished with status {status}: {detail}")]
    Solver {
        status: SolverStatus,
        detail: String,
    },

    #[error("{what}: {first} and {second} disagree")]
    CrossCheck {
        what: String,
        first: f64,
        second: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn shape(msg: impl fmt::Display) -> Self {
        Error::Shape(msg.to_string())
    }

    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
