//! Error type shared across the library.

use thiserror::Error;

/// Errors surfaced by samplers, flow evaluation, integrators and harnesses.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("covariance factorization failed at pivot {pivot}: diagonal {diag:e} is not positive")]
    Factorization { pivot: usize, diag: f64 },

    /// Circulant embedding produced a genuinely negative eigenvalue. The
    /// embedding of fractional Gaussian noise is nonnegative definite for
    /// H in (0,1), so this signals a bug, not a tolerable condition.
    #[error("circulant embedding produced negative eigenvalue {min_eigenvalue:e}")]
    NegativeEigenvalue { min_eigenvalue: f64 },

    /// Flow queried outside the interval it is built on.
    #[error("flow evaluated at u = {u:e} outside [-{radius:e}, {radius:e}]")]
    FlowDomain { u: f64, radius: f64 },

    /// A trajectory left the guard box around the a-priori state bound.
    #[error("state |y| = {value:e} exceeded guard {guard:e}; the scheme state should stay within {bound:e}")]
    BoundExceeded { value: f64, guard: f64, bound: f64 },

    /// Adaptive integrator could not meet its tolerance.
    #[error("step size underflow at h = {h:e}")]
    StepUnderflow { h: f64 },

    /// Two trajectories do not share a time grid.
    #[error("time grids differ at index {index}: {left:e} vs {right:e}")]
    GridMismatch { index: usize, left: f64, right: f64 },

    /// Caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A constant evaluated to infinity; the offending exponent is reported.
    #[error("constant overflowed: exp({exponent:e}) in {context}")]
    ConstantOverflow { exponent: f64, context: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
