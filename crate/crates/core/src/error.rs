use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no token reaches the minimum frequency {min_freq}")]
    EmptyVocabulary { min_freq: u32 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("topic {topic} received no probability mass")]
    DegenerateTopic { topic: usize },
    #[error("training diverged at epoch {epoch}: mean loss is not finite")]
    Divergence { epoch: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("training labels contain a single class ({0})")]
    SingleClass(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
