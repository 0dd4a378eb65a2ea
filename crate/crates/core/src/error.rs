use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate process: {0}")]
    Degenerate(String),

    #[error("dense Gaussian evaluation limited to {cap} queries, got {count}")]
    QueryCapExceeded { count: usize, cap: usize },

    #[error("covariance not positive definite at pivot {index} ({context})")]
    NotPositiveDefinite { index: usize, context: String },

    #[error("{context}: need at least {needed} usable points, have {got}")]
    InsufficientData {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("enumeration limited to N ≤ {cap}, got {n}")]
    EnumTooLarge { n: u32, cap: u32 },

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
