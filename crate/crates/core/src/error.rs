use thiserror::Error;

use crate::freezing::Measure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    DidNotConverge(usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystemIndex { index: usize, count: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("basis index {0} out of range")]
    BadIndex(usize),

    #[error("invalid rotation levels ({a}, {b}) for dimension {dim}")]
    BadLevels { a: usize, b: usize, dim: usize },

    #[error("negative time {0} us")]
    NegativeTime(f64),

    #[error("dephasing level {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("state is not bipartite (dims {0:?})")]
    NonBipartite(Vec<usize>),

    #[error("restart budget must be at least 1")]
    BudgetZero,

    #[error("empty time grid")]
    EmptyGrid,

    #[error("time grid must be nonnegative and strictly increasing")]
    UnsortedGrid,

    #[error("empty or uncovered freezing interval")]
    EmptyInterval,

    #[error("negative discord sample {0}")]
    NegativeDiscord(f64),

    #[error("measure {0:?} missing from trace")]
    MeasureMissing(Measure),

    #[error("measure {0:?} is not available for this state")]
    MeasureUnavailable(Measure),

    #[error("invalid parameter grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported subsystem dimensions {0:?}")]
    UnsupportedDims(Vec<usize>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("likelihood maximization did not converge within {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
