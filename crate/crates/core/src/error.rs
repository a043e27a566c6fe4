use thiserror::Error;

#[derive(Debug, Error)]
pub enum SbtError {
    #[error("invalid curve descriptor: {0}")]
    InvalidCurve(String),

    #[error("arclength reparameterization failed: residual {residual:.3e} exceeds {tolerance:.1e}")]
    Reparameterization { residual: f64, tolerance: f64 },

    #[error("frame construction failed: {0}")]
    Frame(String),

    #[error("radius {epsilon} does not fit the centerline (r_max = {r_max})")]
    InadmissibleGeometry { epsilon: f64, r_max: f64 },

    #[error("curve self-intersects: nodes {i} and {j} coincide")]
    SelfIntersection { i: usize, j: usize },

    #[error("grid too small: {got} < {min}")]
    GridTooSmall { got: usize, min: usize },

    #[error("linear system is numerically singular (condition estimate {condition:.3e}); {hint}")]
    Singular { condition: f64, hint: String },

    #[error("linear algebra backend: {0}")]
    Linalg(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SbtError>;
