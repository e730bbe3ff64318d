use std::path::PathBuf;

use thiserror::Error;

use crate::control::ControlStepResult;

/// Which side of the pressure band a saturated request fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationDirection {
    OverPressure,
    UnderPressure,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("chamber {chamber}: pressure {pressure} kPa outside [{min}, {max}] kPa")]
    PressureOutOfRange {
        chamber: usize,
        pressure: f64,
        min: f64,
        max: f64,
    },

    #[error("length {length} mm is unreachable ({direction:?}); reachable band is [{min}, {max}] mm")]
    Saturation {
        length: f64,
        direction: SaturationDirection,
        min: f64,
        max: f64,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("controller did not converge after {} iterations", trajectory.len())]
    NonConvergence { trajectory: Vec<ControlStepResult> },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
