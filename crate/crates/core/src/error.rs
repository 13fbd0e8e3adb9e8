use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty equation set")]
    EmptyEquationSet,

    #[error("unbalanced math delimiter at byte {offset}: {message}")]
    UnbalancedMath { offset: usize, message: String },

    #[error("math parse error at byte {offset}: {message}")]
    MathParse { offset: usize, message: String },

    #[error("unknown equation placeholder {index} in document {doc_id}")]
    UnknownPlaceholder { doc_id: String, index: usize },

    #[error("{class} id {id} out of range (size {size})")]
    IdOutOfRange {
        class: &'static str,
        id: u32,
        size: usize,
    },

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("attempted write to frozen {0} table")]
    FrozenTable(&'static str),

    #[error("training diverged in {pass} pass at epoch {epoch}")]
    Divergence { pass: &'static str, epoch: usize },

    #[error("untokenizable equation")]
    UntokenizableEquation,

    #[error("unknown equation id {0}")]
    UnknownEquation(u32),

    #[error("empty query: none of the query words are in the vocabulary")]
    EmptyQuery,

    #[error("corrupt artifact {path}: {message}")]
    Corrupt { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool: 1 runtime failure,
    /// 2 usage or input error, 3 corrupt artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Corrupt { .. } => 3,
            Error::Usage(_) | Error::Config(_) | Error::EmptyCorpus | Error::EmptyQuery => 2,
            Error::UnknownEquation(_) => 2,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        }
    }
}
