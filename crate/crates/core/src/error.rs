use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by every module of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument to {op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },

    #[error("non-finite value in {op}: {detail}")]
    NonFinite { op: &'static str, detail: String },

    #[error("numeric divergence: {0}")]
    Divergence(String),

    #[error("dataset error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint {path}: bad magic bytes")]
    CheckpointMagic { path: PathBuf },

    #[error("checkpoint {path}: unsupported format version {found} (expected {expected})")]
    CheckpointVersion { path: PathBuf, found: u16, expected: u16 },

    #[error("checkpoint {path}: truncated ({detail})")]
    CheckpointTruncated { path: PathBuf, detail: String },

    #[error("checkpoint {path}: checksum mismatch")]
    CheckpointChecksum { path: PathBuf },

    #[error("checkpoint {path}: {detail}")]
    CheckpointLayout { path: PathBuf, detail: String },

    #[error("item {index}: {source}")]
    Item {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub(crate) fn invalid(op: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidArgument { op, detail: detail.into() }
    }

    pub(crate) fn non_finite(op: &'static str, detail: impl Into<String>) -> Self {
        Error::NonFinite { op, detail: detail.into() }
    }

    /// True for errors caused by bad numbers rather than bad inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::Divergence(_) => true,
            Error::Item { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
