use thiserror::Error;

/// Errors raised by the spectral toolkit.
///
/// Variants fall into two groups: input validation (bad configuration,
/// violated preconditions) and numerical failure (overflow, non-convergence).
/// [`LassoError::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum LassoError {
    #[error("failed to parse problem config: {0}")]
    Parse(String),

    #[error("non-positive length: {0}")]
    NonPositiveLength(f64),

    #[error("non-finite sample at index {index}: {value}")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("unknown potential family '{0}'")]
    UnknownFamily(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value during propagation at lambda = {lambda} (magnitude ~ {magnitude:e})")]
    NonFinite { lambda: f64, magnitude: f64 },

    #[error("eigensolver did not converge after {iterations} iterations at index {index}")]
    NoConvergence { index: usize, iterations: usize },

    #[error("derivatives of the zero-potential characteristic function up to order {0} vanish at 0")]
    DegenerateMultiplicity(usize),

    #[error("extrapolation of the normalising constant did not converge: {0}")]
    Extrapolation(String),

    #[error("ill-conditioned design matrix (condition number {0:e})")]
    IllConditioned(f64),

    #[error("insufficient spectrum: {got} eigenvalues, need at least {need}")]
    InsufficientSpectrum { got: usize, need: usize },
}

impl LassoError {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LassoError::NonFinite { .. }
                | LassoError::NoConvergence { .. }
                | LassoError::DegenerateMultiplicity(_)
                | LassoError::Extrapolation(_)
                | LassoError::IllConditioned(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LassoError>;
