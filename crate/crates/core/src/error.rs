use thiserror::Error;

/// Errors raised while building, propagating or reporting on the model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "domain too small: grid resolves |k| <= {k_max:.4} but the packet needs {k_needed:.4} \
         (use more points or a narrower domain)"
    )]
    DomainTooSmall { k_max: f64, k_needed: f64 },

    #[error("initial packet is clipped by the grid: discrete norm {norm:.12} deviates from 1")]
    NormalizationFailure { norm: f64 },

    #[error("diabatic surfaces do not cross in (0, {delta_x})")]
    NoCrossing { delta_x: f64 },

    #[error(
        "calibration failed: target delta {target} not bracketed by delta({lo:.6}) = {delta_lo:.6e} \
         and delta({hi:.6}) = {delta_hi:.6e}"
    )]
    CalibrationFailure {
        target: f64,
        lo: f64,
        hi: f64,
        delta_lo: f64,
        delta_hi: f64,
    },

    #[error("sequential yield needs an odd transit count >= 1, got {0}")]
    InvalidTransitCount(u32),

    #[error("step instability at t = {time:.3} fs: {reason}")]
    StepInstability { time: f64, reason: String },

    #[error("schedule window [{t_on}, {t_off}] extends past t_final = {t_final}")]
    ScheduleOutOfRange { t_on: f64, t_off: f64, t_final: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time step too large: per-step jump probability {probability:.4} >= 0.1")]
    StepTooLarge { probability: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("experiment precondition violated: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
