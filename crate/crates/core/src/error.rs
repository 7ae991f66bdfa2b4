use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {y} is outside the reachable range [{lo}, {hi}]")]
    Range { y: f64, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid problem: {0}")]
    InvalidSpec(String),

    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    QuadratureLimit { estimate: f64, error: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (distance {distance:e})")]
    NoConvergence { iterations: usize, distance: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integral condition not met: {0}")]
    ConditionNotMet(String),

    #[error("tail remainder could not be bounded: {0}")]
    TailError(String),

    #[error("no validity window found on the profile table")]
    WindowEmpty,

    #[error("f(v) - g(v') became negative at r = {r} (f = {f}, g = {g}); integration tolerance too loose")]
    SignViolation { r: f64, f: f64, g: f64 },
}
