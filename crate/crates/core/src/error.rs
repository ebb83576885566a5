use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    #[error("identifier must be non-empty")]
    EmptyId,

    #[error("duplicate {kind} `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("preference {0} lies outside [-1, 1]")]
    OutOfRange(f64),

    #[error("value {value} outside scale [{lo}, {hi}]")]
    OutOfScale { value: f64, lo: f64, hi: f64 },

    #[error("invalid scale [{lo}, {hi}]: lower bound must be below upper bound")]
    InvalidScale { lo: f64, hi: f64 },

    #[error("profiles are defined over different element sets")]
    DimensionMismatch,

    #[error("profile of `{0}` still has unresolved entries")]
    Incomplete(String),

    #[error("users `{0}` and `{1}` have no commonly known elements")]
    NoCommonElements(String, String),

    #[error("no similar users can predict `{element}` for `{user}`")]
    NoSimilarUsers { user: String, element: String },

    #[error("standard deviation of an empty sample")]
    EmptySample,

    #[error("confidence {0} lies outside [0, 1]")]
    InvalidConfidence(f64),

    #[error("threshold policy `{0}` needs a prediction confidence")]
    MissingConfidence(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid synthetic cohort spec: {0}")]
    InvalidSpec(String),

    #[error("invalid experiment split: {0}")]
    InvalidSplit(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no {kind} registered under `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate entry for user `{user}` and element `{element}`")]
    DuplicateEntry {
        line: u64,
        user: String,
        element: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
