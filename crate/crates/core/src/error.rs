use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments violate an operation's contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A binary file (features or checkpoint) failed to parse.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// A non-finite value showed up during training or differentiation.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("annotation data error: {0}")]
    Annotation(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
