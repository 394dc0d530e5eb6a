use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent {name} = {value}: {reason}")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("complex input given to a real-restricted computation")]
    RealFieldViolation,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("disjointification exhausted at step {step}")]
    Exhausted { step: usize },

    #[error("solver gap not closed: best upper bound {upper}, best lower bound {lower}")]
    Tolerance { upper: f64, lower: f64 },

    #[error("point is outside the pseudospectrum: 1/||R(z)|| = {inv_resolvent} > eps = {eps}")]
    OutsidePseudospectrum { inv_resolvent: f64, eps: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("cone solver: {0}")]
    Cone(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
