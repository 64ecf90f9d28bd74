//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numeric operations in this crate.
#[derive(Debug, Error)]
pub enum RigidityError {
    /// A covariance sequence cannot be summed into a density (unknown tail).
    #[error("covariance sequence is not summable: {0}")]
    NonSummableCovariance(String),

    /// A candidate spectral density took a negative value.
    #[error("density is negative at u = {location:?} (value {value:.3e})")]
    NegativeDensity { location: Vec<f64>, value: f64 },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// A density or kernel evaluation returned a non-finite value.
    #[error("evaluation failure at u = {location:?}: {reason}")]
    EvaluationFailure { location: Vec<f64>, reason: String },

    /// A Gram matrix was too ill-conditioned to diagnose reliably.
    #[error("Gram matrix ill-conditioned (estimated condition {0:.3e})")]
    IllConditioned(f64),

    /// An operation needed zero annotations that were not provided.
    #[error("missing zero annotations: {0}")]
    MissingAnnotations(String),

    /// Declared zero annotations disagree with the measured pole orders.
    #[error("inconsistent annotations: {0}")]
    InconsistentAnnotations(String),

    /// Circulant embedding produced negative eigenvalues beyond tolerance
    /// and no fallback was allowed.
    #[error("circulant embedding failure: {0}")]
    EmbeddingFailure(String),

    /// A closed-form transform disagrees with the numeric quadrature check.
    #[error("transform mismatch: {0}")]
    TransformMismatch(String),

    /// Invalid argument or configuration value.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// External file I/O or format problem.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RigidityError {
    fn from(e: std::io::Error) -> Self {
        RigidityError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for RigidityError {
    fn from(e: serde_json::Error) -> Self {
        RigidityError::Io(format!("json: {e}"))
    }
}

impl From<csv::Error> for RigidityError {
    fn from(e: csv::Error) -> Self {
        RigidityError::Io(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, RigidityError>;
