use thiserror::Error;

/// Errors raised by the numerical routines and the experiment driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("numeric failure: {msg} (last residual {residual:e})")]
    Numeric { msg: String, residual: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown name: {0}")]
    Lookup(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { msg: msg.into(), residual }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
