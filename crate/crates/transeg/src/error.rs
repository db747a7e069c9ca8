//! Crate-wide error type.

use std::fmt;

use crate::topology::Frame;

pub type Result<T> = std::result::Result<T, TransegError>;

#[derive(Debug)]
pub enum TransegError {
    InvalidVocabulary(String),
    InvalidPath(String),
    InvalidSegmentation(String),
    FrameOutOfRange { t: Frame, frames: Frame },
    /// Query hit a state that carries zero path mass (e.g. a boundary where
    /// the blank probability is one, or a survival denominator of zero).
    Unreachable(String),
    /// Combinatorial guard exceeded in an enumeration oracle.
    EnumerationGuard { limit: u64, required: u64 },
    OutOfVocabulary(String),
    Parse { location: String, detail: String },
    VersionMismatch { found: u64, expected: u64 },
    Io(std::io::Error),
    Config(String),
}

impl fmt::Display for TransegError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidVocabulary(msg) => write!(f, "invalid vocabulary: {msg}"),
            Self::InvalidPath(msg) => write!(f, "invalid alignment path: {msg}"),
            Self::InvalidSegmentation(msg) => write!(f, "invalid segmentation: {msg}"),
            Self::FrameOutOfRange { t, frames } => {
                write!(f, "frame {t} out of range 1..={frames}")
            }
            Self::Unreachable(msg) => write!(f, "unreachable state: {msg}"),
            Self::EnumerationGuard { limit, required } => write!(
                f,
                "enumeration guard exceeded: {required} items, limit {limit}"
            ),
            Self::OutOfVocabulary(sym) => write!(f, "symbol not in vocabulary: {sym:?}"),
            Self::Parse { location, detail } => write!(f, "parse error at {location}: {detail}"),
            Self::VersionMismatch { found, expected } => {
                write!(f, "unsupported format version {found}, expected {expected}")
            }
            Self::Io(e) => write!(f, "io error: {e}"),
            Self::Config(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for TransegError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for TransegError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}
