use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: unknown dataset name, bad config key, invalid value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config file diagnostics with a line number.
    #[error("{path}:{line}: {message}")]
    ConfigLine {
        path: String,
        line: usize,
        message: String,
    },

    /// Dataset content problems, pointing at the file and (1-based) line.
    #[error("data error in {file} at line {line}: {message}")]
    DataRow {
        file: String,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    /// Caller violated an operation's contract (shape mismatch, empty input).
    #[error("usage error: {0}")]
    Usage(String),

    /// Training produced a non-finite loss or parameter.
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Every member has zero accuracy, so the ancilla can never be post-selected.
    #[error("degenerate ensemble: sum of accuracies is zero, post-selection cannot succeed")]
    DegenerateEnsemble,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
