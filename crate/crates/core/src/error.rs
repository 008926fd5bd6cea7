use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameters or configuration rejected before any numerical work.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A computation could not reach a decision at the requested precision.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("quadrature did not converge after {levels} levels (last change {last_change:.3e})")]
    Quadrature { levels: usize, last_change: f64 },

    /// A check was invoked on inputs that violate its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
