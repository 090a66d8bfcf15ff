use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} real coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exponent q = {q} outside the admissible range ({lo}, {hi})")]
    ExponentRange { q: f64, lo: f64, hi: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch: fields must share one grid")]
    GridMismatch,

    #[error("grid does not cover the required region: {0}")]
    GridCoverage(String),

    #[error("set is unbounded; a finite bounding box is required")]
    Unbounded,

    #[error("support box (radius {support}) does not strictly contain the set bounding box")]
    SupportTooSmall { support: f64 },

    #[error("mask nodes intersect the zero-constraint region")]
    MaskTouchesBoundary,

    #[error("removed ball {index} has radius {radius} >= {limit}; it must fit strictly inside its shell")]
    SwissCheeseRadius { index: u32, radius: f64, limit: f64 },

    #[error("singular input: evaluation point coincides with the integration variable")]
    SingularPoint,

    #[error("finite-difference step {h} too large relative to |zeta| = {norm}")]
    StepTooLarge { h: f64, norm: f64 },

    #[error("zero-gradient field: the Sobolev quotient is undefined")]
    ZeroGradient,

    #[error("family member {index} is singular inside the domain")]
    SingularFamilyMember { index: usize },

    #[error("invalid criterion configuration: {0}")]
    Config(String),

    #[error("unsupported ambient dimension {dim} for numeric solves (supported: 2, 4)")]
    UnsupportedDimension { dim: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
