use thiserror::Error;

/// Errors produced by the inference engine and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("embedding has non-finite component at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class id {class} out of range for {classes} classes")]
    InvalidLabel { class: usize, classes: usize },

    #[error("at least two classes are required, got {0}")]
    TooFewClasses(usize),

    #[error("statistics need at least 2 vectors, got {0}")]
    StatsDegenerate(usize),

    #[error("ingest error at byte offset {offset}: {message}")]
    Ingest { offset: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("synthetic generator failed: {0}")]
    Generator(String),

    #[error("oracle linear system is singular")]
    OracleSingular,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
