use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("system is not underdamped: damping ratio {xi} (requires xi < 1)")]
    NotUnderdamped { xi: f64 },

    #[error("time {t} lies outside the horizon [0, {t_bar}]")]
    OutOfDomain { t: f64, t_bar: f64 },

    #[error(
        "horizon T = {t_bar} is in the exceptional set sin(omega_d T) = 0{}: |sin(omega_d T)| = {sine:.3e}; perturb the horizon, e.g. T = {suggestion}",
        mode.map(|m| format!(" for mode {m}")).unwrap_or_default()
    )]
    ExceptionalHorizon {
        t_bar: f64,
        sine: f64,
        suggestion: f64,
        mode: Option<usize>,
    },

    #[error("degree {degree} exceeds the cap {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("initial-velocity closure is degenerate: coefficient of x_T is {coefficient:.3e}")]
    DegenerateClosure { coefficient: f64 },

    #[error("matrix `{name}` is not symmetric positive definite")]
    NotPositiveDefinite { name: &'static str },

    #[error("damping is not classical: relative off-diagonal modal damping {ratio:.3e}")]
    NonClassicalDamping { ratio: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("boundary conditions violated: {0}")]
    BoundaryViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
