use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty query bag")]
    EmptyQueryBag,
    #[error("empty bag of words")]
    EmptyBag,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no embeddings")]
    NoEmbeddings,
    #[error("embedding for `{token}` has width {found}, expected {expected}")]
    DimensionMismatch { token: String, expected: usize, found: usize },
    #[error("embedding for `{0}` is the zero vector")]
    ZeroVector(String),
    #[error("document frequency of `{token}` ({df}) exceeds document count {docs}")]
    DfExceedsDocs { token: String, df: u64, docs: u64 },
    #[error("duplicate id `{id}` at entry {position}")]
    DuplicateId { id: String, position: usize },
    #[error("empty api path for `{0}`")]
    EmptyPath(String),
    #[error("unknown api `{0}`")]
    UnknownApi(String),
    #[error("invalid recommendation list: {0}")]
    InvalidList(String),
    #[error("invalid feedback record: {0}")]
    InvalidRecord(String),
    #[error("no training data")]
    NoTrainingData,
    #[error("no preference pairs")]
    NoPreferencePairs,
    #[error("degenerate labels")]
    DegenerateLabels,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("empty pool")]
    EmptyPool,
    #[error("session `{0}` is closed")]
    SessionClosed(String),
    #[error("unknown query id `{0}`")]
    UnknownQueryId(String),
    #[error("api `{api}` is not in the list shown for query `{query_id}`")]
    ApiNotInList { query_id: String, api: String },
}
