use thiserror::Error;

/// Errors raised by the model, estimators and linear-algebra kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("memory guard: {needed_bytes} bytes needed, budget {budget_bytes}")]
    MemoryGuard { needed_bytes: u64, budget_bytes: u64 },
    #[error("operation not valid in this prior mode: {0}")]
    PriorMode(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
