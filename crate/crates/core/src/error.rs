use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WptError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("amplitude {amplitude} is outside the amplifier domain [0, {saturation})")]
    OutOfDomain { amplitude: f64, saturation: f64 },

    #[error("waveform is identically zero")]
    ZeroWaveform,

    #[error("time grid has {samples} samples, need at least {required}")]
    InsufficientSamples { samples: usize, required: usize },

    #[error("channel is identically zero")]
    DegenerateChannel,

    #[error("Newton line search made no progress after {iterations} iterations (step underflow)")]
    NoProgress { iterations: usize },

    #[error("starting point is not strictly feasible")]
    Infeasible,

    #[error("SCP iteration {iteration}: {source}")]
    Scp {
        iteration: usize,
        #[source]
        source: Box<WptError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, WptError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WptError {
    WptError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
