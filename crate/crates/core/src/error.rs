use thiserror::Error;

/// Errors produced by the differentiation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A method configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numerical precondition (quadrature order, grid size, ...) is not met.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
