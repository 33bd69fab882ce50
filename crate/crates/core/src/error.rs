use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("phase index {index} out of range for {levels} levels")]
    IndexOutOfRange { index: usize, levels: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("nonpositive denominator {0} in decision ratio")]
    NonPositiveDenominator(f64),

    #[error("matrix I + Pi is not positive definite (smallest eigenvalue {0})")]
    NotPositiveDefinite(f64),

    #[error("projections built from different interference channels")]
    ChannelMismatch,

    #[error("fewer users ({users}) than clusters ({clusters})")]
    TooFewUsers { users: usize, clusters: usize },

    #[error("invalid action {action} for {actions} actions")]
    InvalidAction { action: usize, actions: usize },

    #[error("cross-BS access: BS {requester} touched state owned by BS {owner}")]
    CrossBsAccess { requester: usize, owner: usize },

    #[error("malformed dataset: {0}")]
    Dataset(String),

    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
