use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    Design(String),

    #[error("invalid parameters: {0}")]
    Parameters(String),

    #[error("pattern space of 2^{bits} = {size} patterns exceeds the configured cap of 2^{cap}")]
    PatternSpace { bits: usize, size: u128, cap: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Design(_) => "design",
            Error::Parameters(_) => "parameters",
            Error::PatternSpace { .. } => "pattern_space",
            Error::Index(_) => "index",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::Data(_) => "data",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Argument(_) => "argument",
            Error::TooLarge(_) => "too_large",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
