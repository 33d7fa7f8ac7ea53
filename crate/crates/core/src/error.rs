use thiserror::Error;

use crate::lsq::LmTrace;
use crate::types::NotchFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("digamma evaluated at a pole (z = {re} + {im}i)")]
    DigammaPole { re: f64, im: f64 },

    #[error("no resonance detected: dip depth {depth:.3e} below threshold {threshold:.3e}")]
    NoResonance { depth: f64, threshold: f64 },

    #[error("notch fit did not converge: {reason}")]
    NotchNonConvergence {
        reason: String,
        best: Option<Box<NotchFit>>,
    },

    #[error("resonance is outside the notch model: 1/Q_l - cos(phi)/|Q_c| <= 0")]
    OutOfModel { best: Option<Box<NotchFit>> },

    #[error("least-squares fit did not converge: {reason}")]
    FitNonConvergence { reason: String, trace: LmTrace },

    #[error("unphysical Y-factor measurement: Y = {y} <= 1")]
    UnphysicalMeasurement { y: f64 },

    #[error("temperature series carries no frequency signal")]
    NoSignal,

    #[error("ensemble members do not share the same fixed parameters")]
    InconsistentEnsemble,

    #[error("kinetic fraction undefined when both inductances are zero")]
    UndefinedFraction,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("run failed: {failed} of {total} fits failed")]
    RunFailed { failed: usize, total: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what })
    }
}
