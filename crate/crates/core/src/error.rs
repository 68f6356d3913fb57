use thiserror::Error;

/// Errors raised by grid, spectral and operator routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("construction not resolvable on the grid: {0}")]
    Unresolvable(String),

    #[error("mollification scale {n} too fine for grid (finest allowed scale is {max})")]
    ScaleTooFine { n: u32, max: u32 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("need at least {needed} usable points for a fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("fit window contains no usable frequency band: {0}")]
    EmptyBand(String),

    #[error("memory budget exceeded: {required} bytes required, budget {budget} bytes")]
    MemoryBudget { required: u128, budget: u128 },

    #[error("rate formula denominator vanishes at j = {j}")]
    DenominatorZero { j: u32 },

    #[error("vectors b_{i} and b_{j} violate the separation |b_i - b_j|_min >= 1")]
    SeparationViolated { i: usize, j: usize },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("set is empty")]
    EmptySet,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
