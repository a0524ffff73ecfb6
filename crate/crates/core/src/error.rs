use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("capacity exceeded: {what} needs L = {sites}, limit is {limit}")]
    Capacity {
        what: &'static str,
        sites: usize,
        limit: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("unknown defect target: {0}")]
    UnknownTarget(String),

    #[error("operator is zero")]
    ZeroOperator,

    #[error("operator is not Hermitian (largest imaginary coefficient {0:e})")]
    NotHermitian(f64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grid is not uniform")]
    NonUniformGrid,

    #[error("time series is empty")]
    EmptySeries,

    #[error("{routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("linear algebra backend self-check failed: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_sites(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
