use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("bad format: {0}")]
    Format(String),

    #[error("unknown order reference {0}")]
    UnknownOrder(u64),

    #[error("duplicate order reference {0}")]
    DuplicateOrder(u64),

    #[error("event timestamp {event} precedes book timestamp {book}")]
    OutOfOrder { event: i64, book: i64 },

    #[error("mid price undefined: one-sided book")]
    UndefinedMid,

    #[error("warm-up: need {needed} blocks of history, have {available}")]
    WarmUp { needed: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("no Nemenyi critical value tabulated for k={k}, alpha={alpha}")]
    Untabulated { k: usize, alpha: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_) | Error::Config(_) | Error::Untabulated { .. } => 1,
            Error::Divergence(_) | Error::NonFinite(_) => 3,
            _ => 2,
        }
    }
}
