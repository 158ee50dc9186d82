use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller passed something outside an operation's preconditions.
    Argument,
    /// The input is well formed but the mathematics refuses it.
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed complex: {0}")]
    MalformedComplex(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("energy functional is not Morse: {0}")]
    NonMorse(String),

    #[error("hamiltonian does not separate the pair (delta = {delta})")]
    NotSeparating { delta: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid bar: {0}")]
    InvalidBar(String),

    #[error("{what} did not converge (best residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("implicit midpoint step failed at t = {t} (residual {residual:e}); try a smaller dt")]
    StepFailure { t: f64, residual: f64 },

    #[error("zero differential is inconsistent with path-space homology: {0}")]
    InconsistentDifferential(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::MalformedComplex(_) | Error::InvalidMetric(_) => {
                ErrorKind::Argument
            }
            _ => ErrorKind::Domain,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
