use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("factorization failed at pivot {index}: {reason}")]
    Factorization { index: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigen-iteration did not converge after {0} iterations")]
    EigenNotConverged(usize),

    #[error("invalid Brownian driver: {0}")]
    InvalidDriver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
