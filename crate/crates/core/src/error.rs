use thiserror::Error;

use crate::partition::PartitionViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational `{0}`")]
    BadRational(String),

    #[error("index {index} is below the first index {first} of the family")]
    IndexBelowRange { index: i64, first: i64 },

    #[error("invalid geometric family: {0}")]
    InvalidFamily(String),

    #[error("invalid partition: {}", fmt_violations(.0))]
    Partition(Vec<PartitionViolation>),

    #[error("point {0} lies outside the ambient interval")]
    OutOfDomain(String),

    #[error("invalid point reference `{0}`")]
    BadPointRef(String),

    #[error("invalid function description: {0}")]
    InvalidFunction(String),

    #[error("fiber search window too wide at t = {0}")]
    FiberSearch(String),

    #[error("invalid pattern map: {0}")]
    InvalidPattern(String),

    #[error("point {0} is not mapped by the pattern map")]
    UnmappedPoint(String),

    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("tuple length {found} does not match expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("cloud depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("document error at {context}: {message}")]
    Document { context: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_violations(v: &[PartitionViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn doc(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Document {
            context: context.into(),
            message: message.into(),
        }
    }
}
