use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid frequency table: {0}")]
    InvalidTable(String),

    #[error("expected {expected} group rates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("log-likelihood is not finite: group {group} has positive count in a cell with probability {prob:e}")]
    NonfiniteLikelihood { group: usize, prob: f64 },

    #[error("Fisher information is singular: {0}")]
    SingularInformation(String),

    #[error("no start converged within {max_iter} iterations (best projected gradient {best_grad_norm:e})")]
    NoConvergence { max_iter: usize, best_grad_norm: f64 },

    #[error("degenerate table: {0}")]
    DegenerateTable(String),

    #[error("`{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("type-I-error scenario requires equal group rates, got {0:?}")]
    H0ViolationInSpec(Vec<f64>),

    #[error("no admissible scenario after {0} consecutive proposals")]
    SamplingExhausted(usize),

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
