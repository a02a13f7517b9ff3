use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },

    #[error("insufficient depth: need at least {required}, got {got}")]
    InsufficientDepth { required: usize, got: usize },

    #[error("budget exceeded: {required} items requested, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inverse check failed: |h(h_inv(x)) - x| = {error:e} at x = {at}")]
    InverseCheckFailed { error: f64, at: f64 },

    #[error("operation not supported for {0}")]
    Unsupported(&'static str),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    #[error("path is not admissible at step {step}: {from} -> {to}")]
    InadmissiblePath { step: usize, from: usize, to: usize },

    #[error("generator {index} is not expanding: eigenvalue modulus {modulus}")]
    NotExpanding { index: usize, modulus: f64 },

    #[error("matrix is singular")]
    Singular,
}
