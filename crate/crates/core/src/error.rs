use thiserror::Error;

/// Errors raised by the simulation and audit routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exponential weight overflows on the box (max exponent {max_exponent:.2})")]
    WeightOverflow { max_exponent: f64 },

    #[error("weighted evolution requested for t = {t} < 0; evolve with the mirrored weight instead")]
    NegativeWeightedTime { t: f64 },

    #[error("time step {dt} violates the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("solver aborted after last valid time t = {last_valid_time}: {reason}")]
    SolverAbort { last_valid_time: f64, reason: String },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("fit window: {0}")]
    FitWindow(String),

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
