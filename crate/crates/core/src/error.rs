use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected arguments or a field that breaks a type invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical identity that must hold up to quadrature/round-off did not.
    #[error("{what}: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Identity {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("CFL condition violated at step {step}: {cfl:.4} > {limit}")]
    Cfl { step: usize, cfl: f64, limit: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
