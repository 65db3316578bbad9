use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("numerical failure in {context}: residual {residual:.3e}")]
    NumericalFailure { context: String, residual: f64 },

    #[error("plateau value undefined: {reason}")]
    UndefinedPlateau { reason: String },

    #[error("no diffusive-ballistic crossover: ballistic coefficient {coefficient:.3e} vanishes")]
    NoCrossover { coefficient: f64 },

    #[error("malformed unitary file at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
