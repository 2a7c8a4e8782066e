use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("state index {index} out of range for a space of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("closure exceeded cap after materializing {0} elements")]
    CapExceeded(usize),

    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("first partition does not refine the second (states {0} and {1} are split)")]
    NotRefinement(usize, usize),

    #[error("monoids do not commute: {0}")]
    NotCommuting(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("box layout error: {0}")]
    LayoutError(String),

    #[error("degenerate distance matrix: {0}")]
    DegenerateMatrix(String),

    #[error("invalid distance matrix: {0}")]
    InvalidDistances(String),
}

impl Error {
    pub(crate) fn size(expected: usize, found: usize) -> Self {
        Error::SizeMismatch { expected, found }
    }
}
