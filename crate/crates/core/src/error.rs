use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no prediction for example `{0}`")]
    MissingPrediction(String),

    #[error("unknown example id `{0}`")]
    UnknownId(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("model has not been trained")]
    Untrained,

    #[error("temperature fit failed: {0}")]
    Fit(String),

    #[error("teacher failed on example `{id}`: {reason}")]
    Teacher { id: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record in {} line {line}: {source}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this class of error.
    ///
    /// | code | class |
    /// |------|-------|
    /// | 3 | invalid input, dimension mismatch, undefined correlation |
    /// | 4 | missing prediction or unknown id |
    /// | 5 | model / fitting / teacher failures |
    /// | 6 | configuration |
    /// | 7 | i/o |
    /// | 8 | malformed input file |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::UndefinedCorrelation(_) => 3,
            Error::MissingPrediction(_) | Error::UnknownId(_) => 4,
            Error::Untrained | Error::Fit(_) | Error::Teacher { .. } => 5,
            Error::Config(_) => 6,
            Error::Io { .. } => 7,
            Error::Parse { .. } => 8,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
