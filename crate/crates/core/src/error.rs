use thiserror::Error;

#[derive(Debug, Error)]
pub enum EalmError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset row {row}: expected {expected} inputs, found {found}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset row {row}: non-finite value")]
    NonFiniteValue { row: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("empty structuring element")]
    EmptyStructuringElement,
    #[error("degenerate structuring element")]
    DegenerateStructuringElement,
    #[error("invalid structuring element text: {0}")]
    BadElementText(String),
    #[error("invalid variance")]
    InvalidVariance,
    #[error("no data in plane")]
    NoDataInPlane,
    #[error("no split needed")]
    NoSplitNeeded,
    #[error("unsplittable plane")]
    UnsplittablePlane,
    #[error("degenerate classes")]
    DegenerateClasses,
    #[error("uncovered query")]
    UncoveredQuery,
    #[error("grid spec mismatch")]
    SpecMismatch,
    #[error("invalid grid spec: {0}")]
    BadSpec(String),
    #[error("invalid pgm: {0}")]
    BadPgm(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("model expects {expected} inputs, query has {found}")]
    QueryArity { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EalmError>;
