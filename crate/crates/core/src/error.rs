use thiserror::Error;

/// Errors raised by the library. Numerical failures and invalid input are
/// kept apart so that front ends can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmmsError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("symmetry violated: residual {residual:e} exceeds {tolerance:e}")]
    Symmetry { residual: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular point at r = {0}")]
    SingularPoint(f64),

    #[error("positivity violated: {0}")]
    NotPositive(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("did not converge: {0}")]
    NotConverged(String),
}

impl SmmsError {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            SmmsError::DimensionMismatch(..)
                | SmmsError::InvalidParameter(_)
                | SmmsError::NotPositive(_)
                | SmmsError::Symmetry { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SmmsError>;
