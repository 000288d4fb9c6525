use thiserror::Error;

pub type Result<T> = std::result::Result<T, CglsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CglsError {
    /// A parameter, grid or configuration value violates its contract.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("system matrix is singular ({0})")]
    Singular(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value produced: {0}")]
    Divergence(String),

    #[error("exponent {value:.3e} exceeds the configured bound {bound:.3e}")]
    ExponentOverflow { value: f64, bound: f64 },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<CglsError>,
    },
}

impl CglsError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        CglsError::Validation(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        CglsError::Step {
            step,
            source: Box::new(self),
        }
    }

    /// True when the error stems from bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            CglsError::Validation(_) | CglsError::LengthMismatch { .. } => true,
            CglsError::Step { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(CglsError::LengthMismatch { expected, actual })
    }
}
