use thiserror::Error;

/// Errors surfaced by the numeric layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("matrix scale is singular: {0}")]
    SingularScale(String),
    #[error("degenerate variable at index {index}: {message}")]
    DegenerateVariable { index: usize, message: String },
    #[error("matrix is singular or ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("fixed-point solver did not converge: last residual {residual:e}")]
    SolverNoConvergence { residual: f64 },
    #[error("Stieltjes branch violation: {0}")]
    Branch(String),
    #[error("unsupported multi-interval support; candidate edges: {edges:?}")]
    UnsupportedSupport { edges: Vec<f64> },
    #[error("quadrature precision failure: {0}")]
    Precision(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
