use thiserror::Error;

/// Errors produced by the exclusion-process toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("graph is not connected")]
    Disconnected,

    #[error("level has {states} states, exceeding the state cap of {cap}")]
    CapExceeded { states: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    SymmetryViolation { row: usize, col: usize, gap: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (max off-diagonal {max_off_diagonal:e})")]
    NoConvergence { iterations: usize, max_off_diagonal: f64 },

    #[error("the zero function has no Rayleigh quotient")]
    ZeroFunction,

    #[error("function is not Boolean: value {value} at configuration index {index}")]
    NotBoolean { index: usize, value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("missing basis for level {0}")]
    MissingLevel(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown function family `{0}`")]
    UnknownFamily(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
