use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("unknown chain {0:?}")]
    UnknownChain(String),

    #[error("non-positive token count ({0})")]
    NonPositiveTokenCount(i64),

    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error(
        "line {line}: conflicting values for token {token_id} trait {trait_type}: {first:?} vs {second:?}"
    )]
    ConflictingTrait {
        line: u64,
        token_id: String,
        trait_type: String,
        first: String,
        second: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no flag for transaction {tx_hash} / token {token_id}")]
    MissingFlag { tx_hash: String, token_id: String },

    #[error("unknown token {0}")]
    UnknownToken(String),

    #[error("token {0} has no traits")]
    EmptyTraitSet(String),

    #[error("no sales for token {0}")]
    NoSales(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined slope: predictor has zero variance")]
    UndefinedSlope,

    #[error("circuit budget exceeded ({0} circuits)")]
    CircuitBudgetExceeded(usize),

    #[error("non-positive value {value} at index {index}")]
    NonPositiveValue { index: usize, value: f64 },
}

impl Error {
    /// Whether the failure is an I/O problem (unreadable or unwritable
    /// files) rather than a defect in the data itself.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
