use thiserror::Error;

/// Errors surfaced by the simulation and verification layers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("alpha must lie in (0, 2], got {0}")]
    InvalidAlpha(f64),
    #[error("scale must be nonnegative, got {0}")]
    NegativeScale(f64),
    #[error("hurst must lie in (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("beta must lie in (1, 2], got {0}")]
    InvalidBeta(f64),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time {0} is not a grid point")]
    TimeNotOnGrid(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise field of {requested} bytes exceeds the memory budget of {budget} bytes")]
    FieldTooLarge { requested: u64, budget: u64 },
    #[error("need at least {need} replicates, got {got}")]
    InsufficientReplicates { got: usize, need: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("circulant embedding failed and the grid is too large for the dense fallback ({0} steps)")]
    EmbeddingFailed(usize),
    #[error("cache format error: {0}")]
    CacheFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
