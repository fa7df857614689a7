//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- language model ---
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("context of {len} tokens exceeds budget of {budget}")]
    ContextOverflow { len: usize, budget: usize },
    #[error("token id {0} is out of range for vocabulary of size {1}")]
    InvalidTokenId(u32, usize),
    #[error("model file version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model or dataset file: {0}")]
    Format(String),

    // --- remote backends ---
    #[error("network timeout talking to {0}")]
    NetworkTimeout(String),
    #[error("retries exhausted after {attempts} attempts against {endpoint}")]
    RetryExhausted { endpoint: String, attempts: u32 },
    #[error("backend returned {got} values, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("backend returned a non-finite embedding value")]
    NonFiniteEmbedding,

    // --- guidance ---
    #[error("logit vectors have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite (NaN) value in logit input")]
    NonFiniteInput,
    #[error("guidance parameter {name}={value} outside [0,1] and extrapolation is disabled")]
    ParamOutOfRange { name: &'static str, value: f64 },

    // --- decoding ---
    #[error("temperature must be > 0, got {0}")]
    NonPositiveTemperature(f64),
    #[error("k must satisfy 1 <= k <= vocabulary size, got {0}")]
    InvalidK(usize),
    #[error("nucleus p must lie in (0, 1], got {0}")]
    InvalidP(f64),
    #[error("all tokens are masked; nothing to sample")]
    AllMasked,
    #[error("no token embedding available for token id {0}")]
    MissingEmbeddings(u32),

    // --- embeddings ---
    #[error("text is empty after trimming")]
    EmptyText,
    #[error("embedding degenerated to the zero vector")]
    ZeroEmbedding,
    #[error("cannot take the mean of an empty set of vectors")]
    EmptySet,

    // --- metrics ---
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("mean embedding is the zero vector; cosine undefined")]
    ZeroMeanVector,
    #[error("too few points: need at least {need}, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("too few samples per class: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("holdout set is empty")]
    EmptyHoldout,

    // --- pipeline / ingestion ---
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
