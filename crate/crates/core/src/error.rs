use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution must have at least one state")]
    EmptyDistribution,

    #[error("negative entry {value} at state {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("no observations and no smoothing: the estimate is undefined")]
    EmptySample,

    #[error("state {state} is outside the alphabet of size {k}")]
    StateOutOfRange { state: usize, k: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("second distribution is zero at state {index} where the first has mass")]
    SupportMismatch { index: usize },

    #[error("zero probability at state {index}; the logarithm is undefined")]
    ZeroProbability { index: usize },

    #[error("divergence {0} is negative; the unnormalized geometric mean was fed to a strict temperature step")]
    NegativeDivergence(f64),

    #[error("free energy is undefined at beta = 0")]
    UndefinedAtZeroTemperature,

    #[error("mean {mean} lies outside [{min}, {max}]")]
    MeanOutOfRange { mean: f64, min: f64, max: f64 },

    #[error("posterior mode unavailable: states {states:?} have too few counts for the prior")]
    MapUnavailable { states: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
