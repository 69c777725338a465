use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not invertible (det = {det:e})")]
    NonInvertible { det: f64 },
    #[error("spectral density is singular at the zero frequency")]
    ZeroFrequency,
    #[error("cone supports overlap: delta {delta} must be below half the axial gap {gap}")]
    OverlappingCones { delta: f64, gap: f64 },
    #[error("structure tensor has non-positive trace {trace:e}")]
    ZeroTensor { trace: f64 },
    #[error("deformation jacobian is singular at ({}, {}) (det = {det:e})", .point[0], .point[1])]
    SingularJacobian { point: [f64; 2], det: f64 },
    #[error("conformal family needs a^2 + b^2 > 0; use Deformation::global_rotation({c}) for the constant orientation")]
    DegenerateConformal { c: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidFrequencyGrid(String),
    #[error("warped point ({}, {}) escapes the base grid", .point[0], .point[1])]
    DomainEscape { point: [f64; 2] },
    #[error("direct summation needs {needed} operations, above the cap of {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },
    #[error("scale {scale} is outside the representable band of a {n}-point lattice")]
    ScaleOutOfBand { scale: u32, n: usize },
    #[error("scale {0} is not present in the pyramid")]
    EmptyScale(u32),
    #[error("at least two scales with positive energy are needed, got {0}")]
    InsufficientScales(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
