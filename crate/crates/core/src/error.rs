use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Hilbert-space dimension must be at least 2 (got {0})")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("target state is not generic (min eigenvalue gap {gap:e}); degenerate spectra are not supported")]
    NonGeneric { gap: f64 },

    #[error("point is not stationary (residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("numerical contract violated: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
