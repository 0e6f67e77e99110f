//! Crate-wide error type.

use crate::corpus::FileType;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    // corpus
    #[error("no eligible files for class(es): {0:?}")]
    MissingClass(Vec<FileType>),

    // fragmenter
    #[error("fragmentation produced zero fragments")]
    EmptySet,

    // features
    #[error("cannot normalize a zero-length fragment")]
    ZeroLength,
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    // selection
    #[error("criterion called with an empty feature subset")]
    EmptySubset,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("feature {0} is not a member of the subset")]
    NotMember(usize),
    #[error("feature {0} is already a member of the subset")]
    AlreadyMember(usize),
    #[error("no candidate features left to add")]
    NoCandidates,
    #[error("subset too small for a removal step")]
    SubsetTooSmall,
    #[error("floating selection exceeded the step cap of {0} without terminating")]
    NonTermination(usize),

    // classifiers
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {0} has no training samples")]
    DegenerateClass(FileType),
    #[error("SMO did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("training loss became non-finite at epoch {epoch} (lr {lr})")]
    NaNLoss { epoch: usize, lr: f64 },
    #[error("model file rejected: {0}")]
    FormatVersionMismatch(String),

    // evaluation
    #[error("class {class} has only {units} unit(s) at the {level} level; need at least 2")]
    InsufficientClass {
        class: FileType,
        units: usize,
        level: String,
    },
    #[error("label sequences have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
