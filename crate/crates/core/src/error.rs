use thiserror::Error;

/// Errors raised by the illiquidity toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid probability vector: {0}")]
    Probability(String),

    #[error("scenario space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid impact model: {0}")]
    InvalidModel(String),

    #[error("quadrature did not converge: residual {residual:e} after {steps} steps")]
    QuadratureNonConvergence { residual: f64, steps: usize },

    #[error("tranche {index} sells {size} but only {cap} is available at that depth")]
    TrancheCapViolation { index: usize, size: f64, cap: f64 },

    #[error("risk functional {0} requires a probability vector")]
    MissingProbability(String),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("short-side measure is not supported for {0}")]
    UnsupportedModelForShortSide(String),

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NonPsdCovariance(f64),

    #[error("grid is empty")]
    EmptyGrid,

    #[error("point {0} lies outside the grid span")]
    OutOfGridSpan(f64),

    #[error("Q puts mass {mass} on scenario {index} where P has none")]
    AbsoluteContinuityViolation { index: usize, mass: f64 },

    #[error("invalid position: {0}")]
    InvalidPosition(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
