//! Error type shared by every module in this crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while loading, scoring, or ranking.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text contained nothing but whitespace, or a collection that must
    /// be non-empty was empty.
    #[error("input is empty")]
    EmptyInput,

    /// Step headers were found out of order, e.g. `Step 2:` before `Step 1:`.
    #[error("step markers out of order: step {found} after step {previous}")]
    NonMonotonicMarkers { previous: u64, found: u64 },

    /// A fraction with denominator zero, e.g. `1/0` or `\frac{1}{0}`.
    #[error("zero denominator in '{raw}'")]
    ZeroDenominator { raw: String },

    /// A record failed schema validation. `line` is 1-based; 0 means the
    /// problem is not tied to a specific line.
    #[error("line {line}: field '{field}': {message}")]
    SchemaError {
        line: usize,
        field: String,
        message: String,
    },

    /// Two records share an id that must be unique.
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { id: String, line: usize },

    /// A source/translation pair was called with mismatched ids.
    #[error("id mismatch: source '{source_id}' vs translation '{translation_id}'")]
    IdMismatch {
        source_id: String,
        translation_id: String,
    },

    /// A translation has no source record with the same id.
    #[error("no source record with id '{id}'")]
    UnpairedId { id: String },

    /// An operation that needs at least one instance got none.
    #[error("dataset is empty")]
    EmptyDataset,

    /// A language pool cannot supply the requested number of instances.
    #[error("pool '{language}' has {have} instances, {need} needed")]
    InsufficientPool {
        language: String,
        need: usize,
        have: usize,
    },

    /// A score file has no entry for this candidate.
    #[error("no score entry for id '{id}', candidate {candidate_index}")]
    MissingScore { id: String, candidate_index: usize },

    /// The remote scoring service failed after all retries.
    #[error("remote scorer: {message}")]
    RemoteError { message: String },

    /// Two sequences that must have equal length did not.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// An outcome-level score was required but absent.
    #[error("solution score missing")]
    MissingSolutionScore,

    /// No gold answer is known for this id.
    #[error("no gold answer for id '{id}'")]
    MissingGold { id: String },

    /// The strategy does not aggregate step scores (baseline, self-consistency).
    #[error("strategy '{strategy}' has no score aggregation")]
    NoAggregation { strategy: String },

    /// A training step is missing its correctness label.
    #[error("instance '{id}': step {step_index} has no label")]
    UnlabeledStep { id: String, step_index: usize },

    /// A parameter is outside its documented domain.
    #[error("parameter '{name}': {message}")]
    BadParameter { name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(line: usize, field: &str, message: impl Into<String>) -> Self {
        Error::SchemaError {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn bad_parameter(name: &str, message: impl Into<String>) -> Self {
        Error::BadParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }
}
