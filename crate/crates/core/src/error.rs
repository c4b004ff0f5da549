use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("range error: {0}")]
    RangeError(String),
    #[error("format error at byte offset {offset}: {message}")]
    FormatError { offset: u64, message: String },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Prefixes the message with context, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::ShapeMismatch(m) => Error::ShapeMismatch(format!("{ctx}: {m}")),
            Error::DegenerateInput(m) => Error::DegenerateInput(format!("{ctx}: {m}")),
            Error::NumericalFailure(m) => Error::NumericalFailure(format!("{ctx}: {m}")),
            Error::RangeError(m) => Error::RangeError(format!("{ctx}: {m}")),
            Error::InvalidState(m) => Error::InvalidState(format!("{ctx}: {m}")),
            Error::FormatError { offset, message } => Error::FormatError {
                offset,
                message: format!("{ctx}: {message}"),
            },
            other => other,
        }
    }
}
