use thiserror::Error;

/// Errors raised by the approximation pipeline and its solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An oracle broke a promised property (monotonicity, convexity, Lipschitz bound).
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unsupported distribution: {0}")]
    Distribution(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("invalid instance ({field}): {msg}")]
    Validation { field: String, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
