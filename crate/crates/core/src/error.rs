//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest schema error: {0}")]
    Schema(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt audio file: {0}")]
    CorruptFile(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("record {0} cannot be labeled: status unknown and no symptom data")]
    Unlabeled(String),

    #[error("cannot balance class {class}: {reason}")]
    CannotBalance { class: String, reason: String },

    #[error("cannot split class {class}: only {count} original records (need >= 3)")]
    CannotSplit { class: String, count: usize },

    #[error("duplicate feature key: {0}")]
    DuplicateKey(String),

    #[error("feature key not found: {0}")]
    KeyNotFound(String),

    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) => 1,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
