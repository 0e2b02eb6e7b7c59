use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite loss at row {row}")]
    NonFiniteLoss { row: usize },

    #[error("training diverged at step {step}: parameters are no longer finite")]
    Divergence { step: usize },

    #[error("input perturbation infeasible for n={n}, delta={delta}: a={a} must be below 1/2")]
    Infeasible { n: usize, delta: f64, a: f64 },

    #[error("dataset too small: {n} rows, need at least {min}")]
    TooSmall { n: usize, min: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
