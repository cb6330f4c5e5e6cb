use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("axis {axis} out of range for a field with {axes} axes")]
    AxisOutOfRange { axis: usize, axes: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("field is not normalized (norm = {norm})")]
    Unnormalized { norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resolvability bound violated: {0}")]
    Resolvability(String),
    #[error("post-measurement norm is vanishing ({norm:e})")]
    VanishingNorm { norm: f64 },
    #[error("numerical instability at step {step}: norm changed by factor {factor}")]
    Instability { step: usize, factor: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unphysical state at t = {t}: {reason}")]
    Unphysical { t: f64, reason: String },
    #[error("step size underflow at t = {t} (stiffness)")]
    StepUnderflow { t: f64 },
    #[error("matter fraction below threshold at t = {t} (omega_m = {omega_m:e})")]
    OmegaFloor { t: f64, omega_m: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code for the CLI: 2 = validation, 3 = numerical
    /// instability, 4 = unphysical termination, 1 = everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParameter(_)
            | Error::Resolvability(_) => 2,
            Error::Instability { .. } | Error::StepUnderflow { .. } | Error::NonFinite(_) => 3,
            Error::Unphysical { .. } => 4,
            _ => 1,
        }
    }
}
