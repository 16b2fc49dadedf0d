use thiserror::Error;

use crate::vocab::TokenId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the decoding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("token id {id} out of range for vocabulary of size {size}")]
    CorruptSequence { id: TokenId, size: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distribution has no positive mass")]
    ZeroMass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("residual distribution has no positive mass (target equals drafter)")]
    UnreachableResidual,

    #[error("drafted token {token} has zero probability under its drafter distribution")]
    DraftInvariant { token: TokenId },

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("format version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: String, expected: u32 },

    #[error("unknown language tag `{0}`")]
    UnknownLanguage(String),

    #[error("no decode cycles recorded")]
    NoCycles,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            reason: reason.into(),
        }
    }
}
