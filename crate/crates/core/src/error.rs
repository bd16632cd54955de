use thiserror::Error;

use crate::solver::ConvergenceTrace;

pub type Result<T> = std::result::Result<T, EmhdError>;

#[derive(Debug, Error)]
pub enum EmhdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is not Hermitian-symmetric (max deviation {deviation:.3e})")]
    Symmetry { deviation: f64 },

    #[error("field is not flagged as real-valued")]
    NotReal,

    #[error("operation requires a zero mean mode, found |F(0)| = {magnitude:.3e}")]
    MeanMode { magnitude: f64 },

    #[error("grid mismatch: {0}")]
    Shape(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("Gevrey radius too large: lambda*|k_max|^alpha = {exponent:.3} exceeds guard {guard}")]
    Radius { exponent: f64, guard: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("Picard iteration failed to contract after {} iterations", .trace.iterations.len())]
    Divergence { trace: Box<ConvergenceTrace> },

    #[error("mild-solution fixed point did not contract even on a window of length {window:.3e}")]
    WindowTooLong { window: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid fit window: {0}")]
    Window(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
