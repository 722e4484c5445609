use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("period mismatch: {left} vs {right}")]
    PeriodMismatch { left: f64, right: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("controllability violated: coefficient of mode {mode} vanishes")]
    ControllabilityViolation { mode: i64 },

    #[error("jump coefficients are degenerate (all jumps of the (m-1)-th derivative vanish)")]
    DegenerateJumps,

    #[error("bandwidth overflow: need {needed} modes, only {available} available")]
    BandwidthOverflow { needed: usize, available: usize },

    #[error("operation requires {0}")]
    Unsupported(&'static str),

    #[error("instability guard tripped at t = {time}: norm {norm:e} exceeds {limit:e}")]
    Unstable { time: f64, norm: f64, limit: f64 },

    #[error("state violates the constraint: {0}")]
    Constraint(String),

    #[error("trajectory does not decay (fitted slope {slope})")]
    NotDecaying { slope: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("config error{}: {message}", if path.is_empty() { String::new() } else { format!(" at `{path}`") })]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
