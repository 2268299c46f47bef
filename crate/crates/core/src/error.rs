use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyEdgeList,

    #[error("edge references unknown firm id `{0}`")]
    UnknownFirm(String),

    #[error("firm `{0}` is not in the preprocessed network")]
    FirmNotInNetwork(String),

    #[error("duplicate firm id `{0}`")]
    DuplicateFirm(String),

    #[error("empty network after preprocessing")]
    EmptyAfterPreprocessing,

    #[error("seed set is empty")]
    EmptySeedSet,

    #[error("firm index {index} out of range for network of {len} firms")]
    FirmIndexOutOfRange { index: usize, len: usize },

    #[error("region `{0}` has zero total size")]
    ZeroRegionSize(String),

    #[error("region `{0}` has no firms")]
    EmptyRegion(String),

    #[error("expected a {expected} matrix, got {actual}")]
    KindMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("missing macro data for regions: {}", .0.join(", "))]
    MissingMacro(Vec<String>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input (unreadable or malformed
    /// files, unknown ids), as opposed to failures during computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyEdgeList
                | Error::UnknownFirm(_)
                | Error::FirmNotInNetwork(_)
                | Error::DuplicateFirm(_)
                | Error::MissingMacro(_)
                | Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
