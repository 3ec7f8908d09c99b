use thiserror::Error;

/// Errors raised by the operators, bounds and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge ({reason}); best estimate {estimate:e}, error indicator {error:e}")]
    Convergence {
        reason: String,
        estimate: f64,
        error: f64,
    },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("unsupported dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("degenerate stencil: no grid points in prism for h = {h}, eps = {eps}, alpha = {alpha}")]
    DegenerateStencil { h: f64, eps: f64, alpha: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
