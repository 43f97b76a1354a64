use thiserror::Error;

/// Errors raised by the discretization, fibering algebra, solvers and
/// configuration loader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem parameters: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("field has {found} values but the space has {expected} nodes")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires a nonzero field")]
    ZeroField,

    #[error("degenerate fibering profile: {0}")]
    DegenerateProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("function is not finite at node {node} (x = {x:?})")]
    NonFinite { node: usize, x: [f64; 2] },

    #[error("fibering root absent: {0}")]
    RootAbsent(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature-dominated regime: {0}")]
    QuadratureDominated(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config invalid: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
