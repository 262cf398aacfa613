use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced anywhere in the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("composition error: {0}")]
    Composition(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape { expected: Vec<usize>, found: Vec<usize> },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid bounds: min {min} must be below max {max}")]
    InvalidBounds { min: f64, max: f64 },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Training { epoch: usize, detail: String },

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("episode {episode}, step {step}: {source}")]
    Context {
        episode: usize,
        step: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        Error::Shape {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }

    pub(crate) fn at(self, episode: usize, step: usize) -> Self {
        Error::Context {
            episode,
            step,
            source: Box::new(self),
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Composition(_) => "composition",
            Error::Shape { .. } => "shape",
            Error::Numeric(_) => "numeric",
            Error::InvalidBounds { .. } => "invalid-bounds",
            Error::InvalidAction(_) => "invalid-action",
            Error::State(_) => "state",
            Error::Usage(_) => "usage",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::Training { .. } => "training",
            Error::Comparison(_) => "comparison",
            Error::Context { source, .. } => source.kind(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
