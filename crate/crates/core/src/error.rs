use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("point lies on or near the cut locus of the chart base (relative inner product {0:.3e})")]
    CutLocus(f64),

    #[error("basis is rank deficient (singular value ratio {0:.3e})")]
    RankDeficient(f64),

    #[error("malformed annulus: {0}")]
    MalformedAnnulus(String),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("atom too heavy: max weight {max_weight:.6e} exceeds {limit:.6e}")]
    AtomTooHeavy { max_weight: f64, limit: f64 },

    #[error("constant map has no degree")]
    ConstantMap,

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (area {area:.3e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,

    #[error("too few eigenvalues: need {needed}, have {have}")]
    TooFewEigenvalues { needed: usize, have: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
