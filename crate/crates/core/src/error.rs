use thiserror::Error;

/// Errors raised by the mixture toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state lies outside the admissible set (non-positive density or
    /// temperature, or a finite-difference stencil that leaves it).
    #[error("domain error: {quantity} = {value:e} is not admissible ({reason})")]
    Domain {
        quantity: String,
        value: f64,
        reason: String,
    },

    /// A scalar root search failed to bracket or converge.
    #[error(
        "convergence failure in {context}: bracket [{lo:e}, {hi:e}] with residuals [{f_lo:e}, {f_hi:e}] after {iterations} iterations"
    )]
    Convergence {
        context: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        iterations: usize,
    },

    /// Newton inversion of the Legendre map did not converge.
    #[error("Legendre map inversion failed: {0}")]
    LegendreInversion(String),

    /// A numerically assembled matrix was not symmetric to the required tolerance.
    #[error("matrix {name} asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    Asymmetry {
        name: &'static str,
        asymmetry: f64,
        tolerance: f64,
    },

    /// Eigen-solver produced non-finite output.
    #[error("eigen-solver breakdown: {0}")]
    Eigen(String),

    /// A cell lost hyperbolicity or velocity recovery during time stepping.
    #[error("step failed at t = {time:e} in cell {cell}: {cause}")]
    Step { time: f64, cell: usize, cause: Box<Error> },

    /// A stage produced a negative density; the time step was too large.
    #[error("negative density {value:e} in cell {cell} at t = {time:e}; reduce the CFL number")]
    StepSize { time: f64, cell: usize, value: f64 },

    /// Invalid input (configuration or arguments).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A precondition of a verification routine is not met.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn domain(quantity: impl Into<String>, value: f64, reason: impl Into<String>) -> Self {
        Error::Domain {
            quantity: quantity.into(),
            value,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
