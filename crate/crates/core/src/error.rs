//! Error type shared by the library and the command line front end.

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QhError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("case error: {0}")]
    Case(String),
    #[error("degenerate walk: {0}")]
    Degenerate(String),
    #[error("unclassified walk: {0}")]
    Unclassified(String),
    #[error("root tracking failed: {0}")]
    Tracking(String),
    #[error("inconsistent classification: {0}")]
    Inconsistency(String),
    #[error("unsupported step set: {0}")]
    Support(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("branch cut hit: {0}")]
    Branch(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("wrong model: {0}")]
    Model(String),
    #[error("not monotone: {0}")]
    Monotonicity(String),
    #[error("singular point: {0}")]
    Singularity(String),
    #[error("bad extraction radius: {0}")]
    Radius(String),
    #[error("precision loss: {0}")]
    Precision(String),
    #[error("grid too small: {0}")]
    Grid(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("truncation bound not met: {0}")]
    Truncation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate step ({0}, {1})")]
    DuplicateStep(i32, i32),
    #[error("invalid walk: {0}")]
    Validation(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl QhError {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            QhError::Parse(_)
            | QhError::DuplicateStep(..)
            | QhError::Validation(_)
            | QhError::Support(_)
            | QhError::Case(_)
            | QhError::Model(_)
            | QhError::Degenerate(_)
            | QhError::Unclassified(_)
            | QhError::Domain(_) => 2,
            QhError::Assumption(_) | QhError::Inconsistency(_) | QhError::Monotonicity(_) => 3,
            QhError::Io(_) => 5,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for QhError {
    fn from(e: std::io::Error) -> Self {
        QhError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QhError>;
