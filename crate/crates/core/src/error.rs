use thiserror::Error;

#[derive(Debug, Error)]
pub enum AvemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid problem data: {0}")]
    InvalidData(String),

    #[error("ill-conditioned system on element {element}: condition estimate {condition:.3e}")]
    IllConditioned { element: usize, condition: f64 },

    #[error("singular matrix of size {0}")]
    Singular(usize),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("admissibility enforcement exceeded {0} passes")]
    AdmissibilityCap(usize),

    #[error("mesh invariant violated: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AvemError>;
