use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of per-sample distances (mm for positions, N for forces).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathErrorStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
    pub n_samples: usize,
}

impl PathErrorStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
            max: values.iter().copied().fold(f64::MIN, f64::max),
            n_samples: values.len(),
        })
    }

    /// Averages repeated measurements of the same path.
    pub fn aggregate(runs: &[PathErrorStats]) -> Option<Self> {
        if runs.is_empty() {
            return None;
        }
        let n = runs.len() as f64;
        Some(Self {
            mean: runs.iter().map(|r| r.mean).sum::<f64>() / n,
            std: runs.iter().map(|r| r.std).sum::<f64>() / n,
            max: runs.iter().map(|r| r.max).fold(f64::MIN, f64::max),
            n_samples: runs.iter().map(|r| r.n_samples).sum(),
        })
    }
}

/// Perpendicular distance of each sample to the line through `origin` along
/// the unit vector `direction`.
pub fn path_error(
    samples: &[Vector3<f64>],
    origin: &Vector3<f64>,
    direction: &Vector3<f64>,
) -> Result<PathErrorStats> {
    let norm = direction.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidInput("direction must be a non-zero vector".into()));
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector, |d| = {norm}"
        )));
    }
    let distances: Vec<f64> = samples
        .iter()
        .map(|s| {
            let rel = s - origin;
            (rel - direction * rel.dot(direction)).norm()
        })
        .collect();
    PathErrorStats::from_values(&distances)
}

/// Largest distance of any sample from `center`.
pub fn radial_range(samples: &[Vector3<f64>], center: &Vector3<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("radial range needs at least one sample".into()));
    }
    Ok(samples
        .iter()
        .map(|s| (s - center).norm())
        .fold(0.0, f64::max))
}
