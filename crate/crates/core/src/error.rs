use thiserror::Error;

#[derive(Debug, Error)]
pub enum TypeError {
    #[error("unknown value `{0}`")]
    UnknownValue(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("{0} must be nonempty")]
    Empty(&'static str),
    #[error("duplicate {kind} label `{label}`")]
    DuplicateLabel { kind: &'static str, label: String },
    #[error("delta.{operation}.{value}: missing transition")]
    MissingTransition { value: String, operation: String },
    #[error("delta.{operation}.{value}: next value `{next}` is not a declared value")]
    ImageOutsideValues {
        value: String,
        operation: String,
        next: String,
    },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("unknown builtin type `{0}` (expected tnn:n,n' | register:k | tas | cas:k)")]
    BadBuiltin(String),
    #[error("malformed type file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("process index {index} out of range for {procs} processes")]
    ProcessOutOfRange { index: usize, procs: usize },
    #[error("lambda index {k} out of range 1..={max}")]
    LambdaOutOfRange { k: usize, max: usize },
    #[error("malformed schedule token `{0}` (expected p<i> or c<i>)")]
    BadToken(String),
    #[error("invalid protocol instance: {0}")]
    BadInstance(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search space of {bound} elementary applications exceeds the cap of {cap}")]
    TooLarge { bound: u128, cap: u128 },
    #[error("invalid search input: {0}")]
    Invalid(String),
    #[error("explored {visited} states, over the cap of {cap}")]
    StateExplosion { visited: usize, cap: usize },
    #[error("unsupported bounds: {0}")]
    UnsupportedBounds(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
