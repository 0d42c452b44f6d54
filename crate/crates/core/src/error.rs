use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("closed-form expansion is capped at N = {max}, got N = {n}; use det_direct instead")]
    SizeCap { n: usize, max: usize },

    #[error("block length {n} exceeds the nested-estimator cap of {max}")]
    BlockTooLong { n: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported input family: {0}")]
    UnsupportedInput(String),

    #[error("factorization hit a nonpositive pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that signal numerical pathology rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. })
    }
}
