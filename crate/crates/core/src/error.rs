use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid ordered partition: {0}")]
    InvalidPartition(String),

    #[error("invalid set partition: {0}")]
    InvalidSetPartition(String),

    #[error("{refined} does not refine {coarse}")]
    NotRefinement { coarse: String, refined: String },

    #[error("isotropy group of lambda = {0:?} is not finite")]
    InfiniteIsotropy(Vec<usize>),

    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not special orthogonal: {0}")]
    NotSpecialOrthogonal(String),

    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance {tol:e} within {evaluations} evaluations (error estimate {estimate:e})")]
    QuadratureBudget {
        tol: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("Schur decomposition did not converge")]
    NoConvergence,

    #[error("parse error: {0}")]
    Parse(String),
}
