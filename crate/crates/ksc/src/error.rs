use crate::keys::CipherKind;

/// Crate-wide error type. The CLI maps each category to a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error("wrong cipher: data was encrypted with {actual}, key is for {expected}")]
    WrongCipher {
        expected: CipherKind,
        actual: CipherKind,
    },

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("degenerate value range: {0}")]
    DegenerateRange(String),

    #[error("undefined reference: {0}")]
    UndefinedReference(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
