use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grading: {0}")]
    InvalidGrading(String),
    #[error("degenerate face: {0}")]
    DegenerateFace(String),
    #[error("mesh carries no block tags")]
    MissingBlockTags,
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
    #[error("field `{0}` has no analytic divergence")]
    MissingDivergence(String),
    #[error("point ({0}, {1}) lies outside the reference element")]
    PointOutside(f64, f64),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
