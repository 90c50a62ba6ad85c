use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParams { field: String, reason: String },

    #[error("dimension mismatch: expected {expected} agents, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("agent index {index} out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },

    #[error("effort {value} of agent {agent} lies outside [{min}, {max}]")]
    EffortOutOfBounds {
        agent: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{n} agents exceeds the limit of {limit} for this operation")]
    TooManyAgents { n: usize, limit: usize },

    #[error("best-response iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonContraction { iterations: usize, residual: f64 },

    #[error("sponsorship does not realize the target network with single sponsors")]
    SponsorshipMismatch,

    #[error("orientation search exceeded its budget of {budget} nodes after {tried} orientations")]
    BudgetExceeded { budget: u64, tried: u64 },

    #[error("cannot bracket the switch point of {architecture}: {detail}")]
    BracketFailure { architecture: String, detail: String },

    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),

    #[error("invalid period window: {0}")]
    InvalidWindow(String),

    #[error("regressor matrix is rank deficient")]
    RankDeficient,

    #[error("record format version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
