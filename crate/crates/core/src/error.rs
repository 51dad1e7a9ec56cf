use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    /// A numerical routine stopped before meeting its tolerance.
    #[error("accuracy failure: {what} (estimate {estimate:e}, error bound {error_bound:e})")]
    Accuracy {
        what: String,
        estimate: f64,
        error_bound: f64,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("sweep {sweep}: {msg}")]
    Chain { sweep: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
