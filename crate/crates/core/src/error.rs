use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus contains no sentences")]
    EmptyCorpus,

    #[error("word not in vocabulary: {0:?}")]
    UnknownWord(String),

    #[error("no associate set for cue: {0:?}")]
    MissingCue(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate contingency table: total sentence count is zero")]
    DegenerateTable,

    #[error("design matrix is singular (collinear columns)")]
    SingularDesign,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("cannot annotate slot {slot} ({word:?}): {reason}")]
    Annotation {
        slot: &'static str,
        word: String,
        reason: String,
    },

    #[error("malformed trial {trial}: {reason}")]
    Structural { trial: String, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
