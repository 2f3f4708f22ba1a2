use thiserror::Error;

/// Errors raised by the lattice, ensemble, amplitude, schema and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// The state space does not fit the index width, or exceeds the dense cap.
    #[error("state space too large: {description}")]
    ResourceCap { description: String },

    #[error("index {index} out of range for space of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("map is not a bijection: index {0} has more than one preimage")]
    NotBijective(usize),

    #[error("quantization with {0} levels leaves no probability mass")]
    QuantizationTooCoarse(usize),

    #[error("zero total weight")]
    ZeroWeight,

    #[error("empty branch set")]
    EmptyBranchSet,

    #[error("duplicate branch label {0:?}")]
    DuplicateLabel(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
