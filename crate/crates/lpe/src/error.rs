use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lpe_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },
    #[error("bad header: expected {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{estimator} failed on {failed} of {paths} paths (first: path {first_path}: {first_error})")]
    TooManyFailures {
        estimator: String,
        failed: usize,
        paths: usize,
        first_path: usize,
        first_error: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
