use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid level {0}: levels must be at least 1")]
    InvalidLevel(u32),

    #[error("derivative order {order} exceeds degree {degree}")]
    OrderTooHigh { order: usize, degree: usize },

    #[error("point {0} lies outside the unit interval")]
    OutOfDomain(f64),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("quadrature with {points} points cannot integrate degree {degree} exactly")]
    UnderResolvedQuadrature { points: usize, degree: usize },

    #[error("unsupported number of quadrature points {0} (expected 1..=16)")]
    QuadraturePoints(usize),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("maximum level {n} is below the minimum admissible level {min}")]
    EmptyIndexSet { n: u32, min: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry is not a valid parametrization: {0}")]
    InvalidGeometry(String),

    #[error("newton inversion did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("{0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
