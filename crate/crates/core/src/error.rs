use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("outside the domain of the closed-form branch: {0}")]
    Domain(String),

    #[error("no bound state in bracket {lo:.9}..{hi:.9} GHz")]
    NoBoundState { lo: f64, hi: f64 },

    #[error("flux calibration: {0}")]
    Calibration(String),

    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("integration failed at t = {t:.6} ns: {reason}")]
    Integration { t: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state not found: {0}")]
    NotFound(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
