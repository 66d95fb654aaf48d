use std::io;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (non-finite samples, bad ranges).
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid sample geometry: {0}")]
    Geometry(String),

    /// The validity mask of an extraction or loss is empty.
    #[error("no valid frequency band: {0}")]
    NoBand(String),

    #[error("invalid material model: {0}")]
    Model(String),

    #[error("gating failed: {0}")]
    Gating(String),

    #[error("degenerate value range: {0}")]
    DegenerateRange(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// Non-finite activations in a network pass.
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Format(e.to_string())
        }
    }
}
