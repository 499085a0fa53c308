use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gram matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("gram matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("operation needs k = {expected}, got k = {got}")]
    Dimension { expected: usize, got: usize },
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("predicted {predicted:.3e} lattice points exceeds budget {budget:.3e}")]
    CutoffTooLarge { predicted: f64, budget: f64 },
    #[error("pole at s = {0}")]
    Pole(String),
    #[error("s = 1 is a pole of E(Z, s)")]
    PoleAt1,
    #[error("s = 0 is a pole of the completed function")]
    PoleAt0,
    #[error("|Im a| = {0:e} outside the supported envelope")]
    EnvelopeExceeded(f64),
    #[error("{0} is not a fundamental discriminant")]
    BadDiscriminant(i64),
    #[error("series not convergent: {0}")]
    NotConvergent(String),
    #[error("|t| = {0} below the approximate functional equation regime")]
    RegimeError(f64),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("ill-conditioned design matrix (condition {0:e})")]
    Singular(f64),
    #[error("unsupported k = {0}")]
    BadK(usize),
    #[error("step {step} is coarser than the limit {limit}")]
    StepTooCoarse { step: f64, limit: f64 },
    #[error("Re s = {0} must be positive")]
    NonpositiveRealPart(f64),
    #[error("span too small: {0}")]
    SpanTooSmall(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
