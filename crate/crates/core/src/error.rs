use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel {0} is not smooth enough for third derivatives")]
    UnsupportedSmoothness(&'static str),

    #[error("kernel matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("exclusion ball covers the whole domain")]
    InfeasibleExclusion,

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("unknown problem `{name}` in dimension {dim}")]
    UnknownProblem { name: String, dim: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = LagoError> = std::result::Result<T, E>;
