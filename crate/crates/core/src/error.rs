use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A loss, gradient or parameter became non-finite.
    #[error("divergence: {0}")]
    Divergence(String),

    #[error("memory is empty")]
    EmptyMemory,

    #[error("rejected memory write: {0}")]
    Rejected(String),

    #[error("mechanism contract violated: {0}")]
    Mechanism(String),

    #[error("parse error at byte offset {offset}: {kind}")]
    Parse { offset: usize, kind: ParseErrorKind },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("bad magic number: expected {expected}, found {found}")]
    BadMagic { expected: u32, found: u32 },
    #[error("file truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {0} out of range 0..=9")]
    LabelRange(u8),
    #[error("malformed metrics row: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence(_))
    }
}
