//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by mesh operations, partitioners and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition (range, shape, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is formally valid but degenerate (e.g. all weights zero).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A referenced entity does not exist or is not live.
    #[error("not found: {0}")]
    NotFound(String),

    /// An operation was applied in a state that does not admit it.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two data structures that must mirror each other have diverged.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// The operation is valid but outside supported limits.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A scenario description is invalid.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
