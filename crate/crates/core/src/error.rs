//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model fitting, calibration, and data handling.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid hyperparameters or mutually inconsistent options.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates a precondition (non-finite values, size
    /// mismatches, missing columns, and so on).
    #[error("invalid data: {0}")]
    Data(String),

    /// A structured input file contains a row that cannot be interpreted.
    /// Carries the 1-based line number of the offending row.
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    /// A numeric operation was evaluated outside its domain.
    #[error("numeric domain error: {0}")]
    Numeric(String),

    /// The requested conformal quantile rank exceeds the number of
    /// available calibration scores, so no finite threshold exists.
    #[error(
        "insufficient calibration data: rank {rank} exceeds the {available} available scores; \
         increase the calibration size or the miscoverage level"
    )]
    InsufficientCalibration { rank: usize, available: usize },

    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// A short machine-readable category, used by the command-line
    /// interface to derive exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::InsufficientCalibration { .. } => "config",
            Error::Data(_) | Error::MalformedRow { .. } => "data",
            Error::Numeric(_) => "numeric",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => "io",
        }
    }
}
