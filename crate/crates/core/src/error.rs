use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative time {0} is not allowed")]
    NegativeTime(f64),

    #[error("spectral parameter {lambda} must exceed the growth bound {omega} by at least 1e-6")]
    LambdaNotAdmissible { lambda: f64, omega: f64 },

    #[error("singular linear system in resolvent solve")]
    SingularSolve,

    #[error("ladder did not converge within depth {depth}: last sums differ by {gap:e} (previous {previous:?}, last {last:?})")]
    NonConvergence {
        depth: u32,
        gap: f64,
        previous: Vec<f64>,
        last: Vec<f64>,
    },

    #[error("integrand and integrator share a discontinuity at {0}; the integral may not exist")]
    SharedDiscontinuity(f64),

    #[error("functional has interior jumps and is not in the sun dual")]
    NotInSunDual,

    #[error("state is not in the range of the history embedding: {0}")]
    NotInRange(String),

    #[error("time {t} is not aligned with the grid step {step}")]
    Misaligned { t: f64, step: f64 },

    #[error("fixed-point iteration failed to contract on window starting at {window_start}: residual {residual:e} after {iterations} iterations")]
    NonContraction {
        window_start: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("declared Lipschitz constant {declared} violated: sampled ratio {sampled}")]
    LipschitzViolated { declared: f64, sampled: f64 },

    #[error("numeric overflow at t = {0}")]
    Overflow(f64),

    #[error("configuration error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::config("json", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
