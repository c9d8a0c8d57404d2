use thiserror::Error;

/// Errors raised by constructors and solvers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet must be nonempty")]
    EmptyAlphabet,

    #[error("alphabet labels must be finite and strictly increasing (position {0})")]
    UnsortedAlphabet(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative or non-finite mass at index {0}")]
    InvalidMass(usize),

    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("distortion entries must be finite and nonnegative (index {0})")]
    InvalidCost(usize),

    #[error("quantizer uses {used} distinct outputs but the level budget is {budget}")]
    LevelBudgetExceeded { used: usize, budget: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("level budget must be positive")]
    ZeroBudget,

    #[error("mixture components disagree on alphabets or level budget")]
    InconsistentMixture,

    #[error("label {0} falls outside the representable quantizer range")]
    OutsideGrid(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transport inputs carry zero total mass")]
    ZeroMass,

    #[error("transport inputs are unbalanced: {0} vs {1}")]
    Unbalanced(f64, f64),

    #[error("conditioning on a zero-mass source point {0}")]
    ZeroMassCondition(usize),

    #[error("support of size {size} exceeds the enumeration limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("iterative fit did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("prefix exhausts the type")]
    TypeExhausted,

    #[error("enumeration of {requested} items exceeds the cap {cap}")]
    CapExceeded { requested: f64, cap: f64 },

    #[error("linear program pivot limit reached")]
    PivotLimit,
}

pub type Result<T> = std::result::Result<T, Error>;
