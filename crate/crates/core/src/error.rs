use thiserror::Error;

/// Errors raised by the transfer library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("too few samples: n = {n} must exceed dimension d = {d}")]
    TooFewSamples { n: usize, d: usize },

    #[error("design matrix is rank deficient (relative pivot {ratio:e} below {threshold:e})")]
    RankDeficient { ratio: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gram matrix is not symmetric positive definite")]
    NonSpdGram,

    #[error("zero vector: quantity undefined at x = 0")]
    ZeroVector,

    #[error("degenerate direction: A^k x vanishes, test undefined")]
    DegenerateDirection,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("tuning curve has {0} points, at least 3 required")]
    CurveTooShort(usize),

    #[error("no positive labels: every training sample favours the target model")]
    NoPositiveLabels,

    #[error("empty input")]
    EmptyInput,

    #[error("constant series: standard deviation is zero")]
    ConstantSeries,

    #[error("parse error at row {row}, column '{column}': {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
