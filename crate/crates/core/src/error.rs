use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::translate::TranslateError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("{}: corpus is empty after filtering", path.display())]
    EmptyCorpus { path: PathBuf },

    #[error("{}:{line}: {message}", path.display())]
    Embedding {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: embedding file contains no vectors", path.display())]
    EmptyEmbeddings { path: PathBuf },

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity of a zero-norm vector")]
    ZeroNorm,

    #[error("nearest-neighbor search over an empty target set")]
    EmptyTargets,

    #[error("no source sentence has a nearest neighbor above the similarity threshold {gamma}")]
    NoMatches { gamma: f64 },

    #[error("translation backend: {0}")]
    Translate(#[from] TranslateError),

    #[error("{}:{line}: {message}", path.display())]
    Checkpoint {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("pseudo-parallel states differ: {0}")]
    StateMismatch(String),

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::InvalidUtf8 { .. } | Error::EmptyCorpus { .. } => 4,
            Error::Embedding { .. }
            | Error::EmptyEmbeddings { .. }
            | Error::DimensionMismatch { .. }
            | Error::ZeroNorm => 5,
            Error::EmptyTargets | Error::NoMatches { .. } => 6,
            Error::Translate(_) => 7,
            Error::Checkpoint { .. } | Error::StateMismatch(_) => 8,
            Error::Eval(_) => 9,
            Error::Internal(_) => 10,
        }
    }
}
