use thiserror::Error;

pub type Result<T> = std::result::Result<T, LpBallError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpBallError {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weights must be finite and strictly positive (index {index}, value {value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("radius must be finite and strictly positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("oracle enumeration limited to {max} coordinates, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("multiplier undefined: iterate has empty support")]
    EmptySupport,

    /// A property that holds in exact arithmetic failed at run time.
    #[error("invariant violated at iteration {iteration}: {what}")]
    InvariantViolation { iteration: usize, what: String },
}
