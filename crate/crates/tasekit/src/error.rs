use thiserror::Error;

/// Library-wide error type.
///
/// The variants split along the CLI exit-code contract: configuration
/// mistakes (unknown scheme, inconsistent flags, bad sizes) are recoverable
/// user errors, while singular factorizations and failed nonlinear solves
/// indicate a numerical breakdown in a place where the math says there
/// should be none.
#[derive(Debug, Error)]
pub enum TaseError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("matrix is singular to working precision at pivot {pivot_index} (|pivot| = {pivot:.3e})")]
    Singular { pivot_index: usize, pivot: f64 },

    #[error("evaluation too close to the TASE pole 2^{k}/alpha (|2^k - alpha z| = {distance:.3e})")]
    PoleProximity { k: u32, distance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl TaseError {
    /// True for errors caused by a bad request rather than a numerical
    /// breakdown; drives the CLI exit code (2 vs 3).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            TaseError::InvalidConfig(_) | TaseError::Shape(_) | TaseError::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, TaseError>;
