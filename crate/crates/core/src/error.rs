use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntactically malformed input, with a 1-based line/column or record index.
    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },

    /// Well-formed input that does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("unknown label `{0}` (expected \"Yes\", \"To some extent\" or \"No\")")]
    LabelParse(String),

    #[error("unknown track `{0}`")]
    TrackParse(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("join error: {0}")]
    Join(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Classifies a serde_json failure as either a syntax or a schema problem.
    pub(crate) fn from_json(err: serde_json::Error, context: &str) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Syntax | Category::Eof | Category::Io => Error::Parse {
                position: format!("{context} line {} column {}", err.line(), err.column()),
                message: err.to_string(),
            },
            Category::Data => Error::Schema(format!("{context}: {err}")),
        }
    }
}
