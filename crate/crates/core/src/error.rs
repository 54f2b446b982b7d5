use thiserror::Error;

use crate::circuit::dsl::DslError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported in this theory: {0}")]
    Unsupported(String),

    #[error("purification unsupported: {0}")]
    PurificationUnsupported(String),

    #[error("not a channel: {0}")]
    NotAChannel(String),

    #[error("dilations belong to different channels (distance {distance:.3e})")]
    NotSameChannel { distance: f64 },

    #[error("not a Choi state: {0}")]
    NotAChoiState(String),

    #[error("states are indistinguishable")]
    Indistinguishable,

    #[error("precondition failed: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },

    #[error("wiring error on wire(s) {wires:?}: {msg}")]
    Wiring { wires: Vec<usize>, msg: String },

    #[error("unevaluable payload: {0}")]
    Payload(String),

    #[error(transparent)]
    Dsl(#[from] DslError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}
