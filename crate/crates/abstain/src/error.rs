use std::io;

/// Errors raised while reading or writing files.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes: not an MCS1 file")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    PayloadLength { expected: usize, found: usize },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("malformed image: {0}")]
    Image(String),
    #[error(transparent)]
    Data(#[from] abstain_core::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
