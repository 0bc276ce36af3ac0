use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid box: lower bound exceeds upper bound on axis {axis}")]
    InvalidBox { axis: usize },

    #[error("degenerate box: zero extent on axis {axis}")]
    DegenerateBox { axis: usize },

    #[error("points are not pairwise incomparable: {0:?} and {1:?}")]
    NotAnAntichain(Vec<f64>, Vec<f64>),

    #[error("F1 and F2 overlap at {0:?}")]
    Overlap(Vec<f64>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal evaluated at negative time {0}")]
    NegativeTime(f64),

    #[error("integration failed: non-finite state after t = {last_valid_time}")]
    Integration { last_valid_time: f64 },

    #[error("model evaluation failed at x = {x:?}, u = {u:?}, d = {d:?}")]
    ModelEvaluation { x: Vec<f64>, u: Vec<f64>, d: Vec<f64> },

    #[error("model is not monotone ({0}); the solver requires SM or CSM dynamics")]
    NotMonotone(String),

    #[error("point {0:?} is outside the constraint set")]
    OutsideConstraints(Vec<f64>),

    #[error("empty control candidate list")]
    NoControls,

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
