use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: timestamp {t} on channel {channel} precedes previous timestamp {prev}")]
    Ordering {
        line: usize,
        channel: u16,
        t: u64,
        prev: u64,
    },

    #[error("unsorted input: {0}")]
    Unsorted(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate profile: homogeneous and inhomogeneous widths are both zero")]
    DegenerateProfile,

    #[error("integrator error: {0}")]
    Integrator(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("invalid config at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("curve has no interior maximum")]
    NoMaximum,

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("visibility undefined: {0}")]
    VisibilityUndefined(String),

    #[error("cannot aggregate: {0}")]
    Aggregation(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
