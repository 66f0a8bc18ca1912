use thiserror::Error;

/// Errors raised by simulation, analytic and PDE routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no point strictly before t = {t}")]
    NoPastPoint { t: f64 },

    #[error("need {needed} points strictly before t = {t}, found {found}")]
    InsufficientHistory { t: f64, needed: usize, found: usize },

    #[error("model precondition violated: {0}")]
    ModelPreconditionViolated(String),

    #[error("invalid spike train: {0}")]
    InvalidTrain(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("supercritical kernel: L1 norm {norm} >= 1")]
    SupercriticalKernel { norm: f64 },

    #[error("explosion guard: {max_events} events reached before t = {t}")]
    ExplosionGuard { max_events: usize, t: f64 },

    #[error("intensity {rate} exceeds field ceiling {ceiling} at t = {t}")]
    CeilingExceeded { t: f64, ceiling: f64, rate: f64 },

    #[error("not a density: total mass {mass}")]
    NotADensity { mass: f64 },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    FixedPointDivergence { iterations: usize, residual: f64 },

    #[error("degenerate conditioning at (t, s) = ({t}, {s}): event mass {mass:e}")]
    DegenerateConditioning { t: f64, s: f64, mass: f64 },

    #[error("rate {rate} exceeds accuracy limit {limit} for this step")]
    UnboundedRate { rate: f64, limit: f64 },

    #[error("only {count} replications satisfy the conditioning event, need {needed}")]
    InsufficientConditioningMass { count: usize, needed: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
