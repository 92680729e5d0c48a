use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative value {value} at index {index}")]
    NonPositiveInput { index: usize, value: f64 },
    #[error("state is identically zero")]
    ZeroState,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("state norm {norm} differs from 1 by more than {tolerance}")]
    NotNormalized { norm: f64, tolerance: f64 },
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("negative momentum {0}")]
    NegativeMomentum(f64),
    #[error("zero momentum transfer: the Coulomb transform diverges")]
    ZeroMomentum,
    #[error("form factor at q_max is {value}, must be below {limit} to avoid aliasing")]
    InsufficientSupport { value: f64, limit: f64 },
    #[error("eigen-decomposition residual {residual} exceeds tolerance")]
    DegenerateEigenproblem { residual: f64 },
    #[error(
        "projectile kinetic energy {kinetic} exceeds the gap {gap}; the state is not protected"
    )]
    ProtectiveViolation { kinetic: f64, gap: f64 },
    #[error("sampling density integrates to zero on [{q_min}, {q_max}]")]
    EmptySupport { q_min: f64, q_max: f64 },
    #[error("impact parameter must be positive, got {0}")]
    NonPositiveImpactParameter(f64),
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("impact parameter {b} exceeds the cutoff {cutoff}")]
    CutoffViolation { b: f64, cutoff: f64 },
    #[error("only {populated} of {total} bins are populated")]
    EmptyBins { populated: usize, total: usize },
    #[error("condition number {0:e} exceeds 1e12")]
    IllConditioned(f64),
    #[error("insufficient impact-parameter span: {0}")]
    InsufficientSpan(String),
    #[error("monotone projection moved {moved} of total charge {total}")]
    NonMonotoneBeyondTolerance { moved: f64, total: f64 },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
