use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdcError {
    /// A caller-supplied parameter is outside its domain. `name` is the
    /// offending field so configuration errors can point at it.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HdcError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        HdcError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad configuration rather than by a failure
    /// while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HdcError::InvalidParameter { .. } | HdcError::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HdcError>;
