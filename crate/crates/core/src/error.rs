use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("scalars carry different bump supports")]
    IncompatibleBump,

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("form is not in J^{degree}")]
    NotInJ { degree: usize },

    #[error("characteristic point at {point:?}: |grad_H f wedge| = {norm:e}")]
    CharacteristicPoint { point: Vec<f64>, norm: f64 },

    #[error("outward normal projection degenerates at {0:?}")]
    DegenerateProjection(Vec<f64>),

    #[error("ambiguous boundary side classification: {0}")]
    AmbiguousOrientation(String),

    #[error("patch is not Legendrian: {0}")]
    NonLegendrian(String),

    #[error("graph root solve failed: {0}")]
    RootSolve(String),

    #[error("non-finite integrand value at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("estimator budget too small: {0}")]
    Budget(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable code recorded in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonPositiveDilation(_) => "non-positive-dilation",
            Error::IncompatibleBump => "incompatible-bump",
            Error::DegreeMismatch { .. } => "degree-mismatch",
            Error::NotInJ { .. } => "not-in-j",
            Error::CharacteristicPoint { .. } => "characteristic-point",
            Error::DegenerateProjection(_) => "degenerate-projection",
            Error::AmbiguousOrientation(_) => "ambiguous-orientation",
            Error::NonLegendrian(_) => "non-legendrian",
            Error::RootSolve(_) => "root-solve",
            Error::NonFinite(_) => "non-finite",
            Error::Budget(_) => "budget",
            Error::Parse(_) => "parse",
            Error::InvalidScene(_) => "invalid-scene",
            Error::Io(_) => "io",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
