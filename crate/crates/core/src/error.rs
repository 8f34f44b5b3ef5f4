use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel evaluated at negative time t = {0}")]
    NegativeTime(f64),
    #[error("mesh needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("history holds {have} snapshots but step {step} needs {need}")]
    HistoryTooShort { step: usize, have: usize, need: usize },
    #[error("step system is singular or not positive definite (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("energy must be positive on the fit window (E = {value} at t = {t})")]
    NonPositiveEnergy { t: f64, value: f64 },
    #[error("fit window [{0}, {1}] holds fewer than two usable samples")]
    EmptyWindow(f64, f64),
    #[error("inconsistent envelope case: {0}")]
    InconsistentCase(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical abort at step {step} (t = {t}): {reason}")]
    NumericalAbort { step: usize, t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
