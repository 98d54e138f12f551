use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate grid: times {0} and {1} coincide within relative tolerance")]
    DegenerateGrid(f64, f64),

    #[error("index {index} out of range for grid of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("breakpoint {0} of Cameron-Martin vector is not a grid time")]
    BreakpointNotOnGrid(f64),

    #[error("invalid Cameron-Martin vector: {0}")]
    InvalidVector(String),

    #[error("{what} cap exceeded: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("unknown drift '{0}'")]
    UnknownDrift(String),

    #[error("invalid drift parameters for '{name}': {reason}")]
    InvalidDriftParams { name: String, reason: String },

    #[error("drift '{0}' has no derivative")]
    DerivativeUnavailable(String),

    #[error("constant M must be positive, got {0}")]
    NonPositiveConstant(f64),

    #[error("invalid step configuration: {0}")]
    InvalidSteps(String),

    #[error("method '{method}' does not support {reason}")]
    MethodMismatch { method: String, reason: String },

    #[error("kernel order {0} out of range")]
    OrderOutOfRange(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}
