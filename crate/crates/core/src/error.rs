use thiserror::Error;

/// Errors raised by the estimators, the simulation engine and the I/O layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimError { expected: usize, actual: usize },

    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// The sample matrix is proportional to the target, so the shrinkage
    /// intensities are not identified.
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("numerical failure: {0}")]
    NumericalError(String),

    #[error("invalid argument: {0}")]
    ArgError(String),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigError(_) | Error::ParseError { .. } | Error::ArgError(_) | Error::Io(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
