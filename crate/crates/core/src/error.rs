//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("lag {lag} out of range for series of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("time index {index} out of range for series of length {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("singular covariance matrix (|det| = {det:.3e} below threshold {threshold:.3e})")]
    SingularCovariance { det: f64, threshold: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("series of length {got} too short: need at least {needed}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("zero-lag covariance must be positive, got {0}")]
    NonPositiveS0(f64),

    #[error("degenerate covariance: S11*S22 - S12^2 = {det:.3e} is not positive")]
    DegenerateCovariance { det: f64 },

    #[error("mode {mode} requires a {expected}-dimensional series, got p = {got}")]
    ModeDimensionMismatch {
        mode: String,
        expected: String,
        got: usize,
    },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("{family} copula parameter out of domain: {detail}")]
    ParameterOutOfDomain { family: String, detail: String },

    #[error("pairing order 2r = {0} exceeds the supported maximum of 16")]
    Overflow(usize),

    #[error("enumeration budget exceeded: ~{estimated:.3e} terms (limit {limit:.1e})")]
    BudgetExceeded { estimated: f64, limit: f64 },

    #[error("no plug-in covariance estimator for this input; supply a covariance model ({0})")]
    CovarianceModelRequired(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{failed} of {total} replications failed (limit is 1%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("failed to parse '{value}' as a number (line {line})")]
    CsvParse { line: usize, value: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a path to an I/O error so callers see which file failed.
    pub fn io_at(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
