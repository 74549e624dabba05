use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("absolute continuity violated: q({symbol}) = 0 but p({symbol}) = {mass}")]
    AbsoluteContinuityViolation { symbol: usize, mass: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("empty histogram")]
    EmptyHistogram,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty input")]
    EmptyInput,
    #[error("user group too small: {0}")]
    GroupTooSmall(String),
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
