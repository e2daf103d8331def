use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("attitude too close to gimbal lock (theta = {theta} rad)")]
    SingularAttitude { theta: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("degenerate alpha = 0: {0}")]
    DegenerateAlpha(&'static str),

    #[error("simulation diverged at t = {t} s (state norm {norm:e})")]
    Diverged { t: f64, norm: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
