use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller supplied parameters outside the valid domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("divergence at t = {t}")]
    Divergence { t: f64 },

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("non-Hermitian input (deviation {0:e})")]
    NonHermitian(f64),

    /// A numerical or structural check failed inside a computation.
    #[error("{module}: {gate} check failed: {detail}")]
    Gate {
        module: &'static str,
        gate: &'static str,
        detail: String,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn gate(module: &'static str, gate: &'static str, detail: impl Into<String>) -> Self {
        Error::Gate {
            module,
            gate,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::NonHermitian(_))
    }
}
