//! Crate-wide error type.

/// Errors surfaced by dataset generation, model evaluation, selection and the
/// experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration field violates its invariant. The message names the field.
    #[error("config error: {0}")]
    Config(String),

    /// Input tensor shapes do not match what an operation expects.
    #[error("shape error: {0}")]
    Shape(String),

    /// A persisted file does not conform to its schema.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An argument left the mathematical domain of a function (e.g. a
    /// non-positive concentration reaching digamma).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The label oracle was queried outside its domain.
    #[error("oracle error: {0}")]
    Oracle(String),

    /// An operation was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
