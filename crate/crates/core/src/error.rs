use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("descriptor mismatch: {0} vs {1}")]
    DescriptorMismatch(String, String),
    #[error("expected {expected} local matrices, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("site {site} out of range 1..={max}")]
    SiteOutOfRange { site: usize, max: usize },
    #[error("invalid basis index {index:?}: {reason}")]
    InvalidIndex { index: Vec<usize>, reason: String },
    #[error("zero vector")]
    ZeroVector,
    #[error("malformed input at {field}: {reason}")]
    Malformed { field: String, reason: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no membership predicate registered for {0}")]
    NoPredicate(String),
    /// Two independent routes to the same quantity disagree.
    #[error("cross-check failed for {what}: residual {residual:e}")]
    CrossCheck { what: &'static str, residual: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input errors are the caller's fault; cross-check failures are ours.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::CrossCheck { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
