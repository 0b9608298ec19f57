use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hyperprior whose penalized objective is unbounded below.
    #[error("unbounded objective: {0}")]
    UnboundedObjective(String),

    /// Non-finite values or a failed numeric procedure.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("numeric error at iteration {iter}: {message}")]
    NonFinite {
        iter: usize,
        message: String,
        /// Flattened iterate `[beta, lambda, theta]` at the failure.
        iterate: Vec<f64>,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::UnboundedObjective(_) => "unbounded_objective",
            Error::Numeric(_) | Error::NonFinite { .. } => "numeric",
            Error::Data(_) => "data",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
