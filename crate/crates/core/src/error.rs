use thiserror::Error;

/// Errors raised by the arithmetic, function-application and solver layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation
    /// (division by zero, empty interval, nonpositive horizon, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A point left the region on which a function is defined.
    #[error("range error: {0}")]
    Range(String),
    /// Problem data is inconsistent with the solver hypotheses.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
