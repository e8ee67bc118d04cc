use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("non-positive warp sample w = {value} at r = {r}")]
    NonPositiveWarp { r: f64, value: f64 },
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("metric is not positive definite at {0}")]
    Indefinite(String),
    #[error("non-finite value produced while differencing at {0}")]
    NonFinite(String),
    #[error("slice r = {0} lies outside the grid")]
    SliceOutside(f64),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("slice at r = {r} is not strictly convex (relative eigenvalue {eig})")]
    NotConvex { r: f64, eig: f64 },
    #[error("interpolation inequality violated: margin {0}")]
    EqperViolated(f64),
    #[error("smoothing failed: {0}")]
    Smoothing(String),
    #[error("flow: {0}")]
    Flow(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("verdict failure in stage {stage} at parameter {param}: {detail}")]
    Verdict { stage: String, param: f64, detail: String },
    #[error("unsupported format `{0}`")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
