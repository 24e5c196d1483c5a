use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A series or quadrature did not reach the requested accuracy. `partial`
    /// carries the best value available when the evaluation stopped.
    #[error("precision not reached after {terms} terms (partial value {partial:e})")]
    PrecisionNotReached { partial: f64, terms: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("convention error: {0}")]
    Convention(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "ill-posed system: smallest Gramian eigenvalue {min_eigenvalue:e} \
         (largest {max_eigenvalue:e}); retry with regularization eps >= {suggested_eps:e}"
    )]
    IllPosed {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        suggested_eps: f64,
    },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("linear programming failure: {0}")]
    LinearProgram(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PrecisionNotReached { .. }
                | Error::IllPosed { .. }
                | Error::Quadrature(_)
                | Error::LinearProgram(_)
        )
    }
}
