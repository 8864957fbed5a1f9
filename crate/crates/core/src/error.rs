use thiserror::Error;

/// Errors raised by the constitutive, transport and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("inadmissible state: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("range condition violated: {0}")]
    Inconsistent(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
    #[error("newton iteration failed after {iterations} iterations (scaled residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },
    #[error("cfl violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("at face {face}: {source}")]
    AtFace {
        face: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_face(self, face: usize) -> Self {
        Error::AtFace {
            face,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
