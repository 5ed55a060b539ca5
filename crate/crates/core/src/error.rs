use thiserror::Error;

/// Errors produced by measure construction and the multiscale operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point list")]
    Empty,
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite value at {context}")]
    NonFinite { context: String },
    #[error("intrinsic dimension {n} not in 1..={d}")]
    IntrinsicDimension { n: usize, d: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("operation requires a nonnegative measure")]
    SignedMeasure,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported ambient dimension {0} (expected 2)")]
    UnsupportedDimension(usize),
    #[error("degenerate cube: {points} points in its ball, need at least {needed}")]
    DegenerateCube { points: usize, needed: usize },
    #[error("transport solver failed: {0}")]
    Solver(String),
    #[error("lambda {lambda} is not above the threshold {threshold}")]
    LambdaBelowThreshold { lambda: f64, threshold: f64 },
    #[error("selected cube at level {level} corner {corner:?} has zero mu-mass in its 6x dilation")]
    EmptyDilation { level: i32, corner: Vec<i64> },
    #[error("nu point {index} outside the selected cubes has no matching mu point")]
    UnmatchedPoint { index: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
