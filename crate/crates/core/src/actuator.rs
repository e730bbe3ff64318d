//! Pressure to length mapping of a single chamber.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SaturationDirection};

/// Linear chamber response `length = slope * pressure + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureLengthMap {
    /// mm per kPa.
    pub slope: f64,
    /// mm.
    pub intercept: f64,
    /// kPa.
    pub valid_pressure_range: [f64; 2],
}

impl Default for PressureLengthMap {
    /// Shared linear fit of the three chambers over 0 to 50 kPa.
    fn default() -> Self {
        Self {
            slope: 0.23,
            intercept: 16.35,
            valid_pressure_range: [0.0, 50.0],
        }
    }
}

impl PressureLengthMap {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.valid_pressure_range;
        if ![self.slope, self.intercept, lo, hi].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("pressure-length map"));
        }
        if self.slope <= 0.0 {
            return Err(Error::Config("actuator slope must be > 0".into()));
        }
        if lo >= hi {
            return Err(Error::Config("valid_pressure_range must be increasing".into()));
        }
        Ok(())
    }

    /// Lengths reachable inside the valid pressure range.
    pub fn length_band(&self) -> [f64; 2] {
        let [lo, hi] = self.valid_pressure_range;
        [self.eval(lo), self.eval(hi)]
    }

    fn eval(&self, pressure: f64) -> f64 {
        self.slope * pressure + self.intercept
    }

    pub fn length_from_pressure(&self, pressure: f64) -> Result<f64> {
        if !pressure.is_finite() {
            return Err(Error::NonFinite("pressure"));
        }
        let [lo, hi] = self.valid_pressure_range;
        if pressure < lo || pressure > hi {
            return Err(Error::PressureOutOfRange {
                chamber: 0,
                pressure,
                min: lo,
                max: hi,
            });
        }
        Ok(self.eval(pressure))
    }

    pub fn pressure_from_length(&self, length: f64) -> Result<f64> {
        if !length.is_finite() {
            return Err(Error::NonFinite("length"));
        }
        let [min, max] = self.length_band();
        let direction = if length > max {
            Some(SaturationDirection::OverPressure)
        } else if length < min {
            Some(SaturationDirection::UnderPressure)
        } else {
            None
        };
        if let Some(direction) = direction {
            return Err(Error::Saturation {
                length,
                direction,
                min,
                max,
            });
        }
        Ok(self.unclamped_pressure(length))
    }

    /// Inverse map without the range check.
    pub fn unclamped_pressure(&self, length: f64) -> f64 {
        (length - self.intercept) / self.slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    #[serde(rename = "pressure_kpa")]
    pub pressure: f64,
    #[serde(rename = "length_mm")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub map: PressureLengthMap,
    /// Root mean square of the length residuals (mm).
    pub residual_rms: f64,
}

/// Ordinary least-squares line through the samples. The valid range of the
/// returned map spans the sampled pressures.
pub fn fit_pressure_length(samples: &[CalibrationSample]) -> Result<LinearFit> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|s| !s.pressure.is_finite() || !s.length.is_finite())
    {
        return Err(Error::NonFinite("calibration sample"));
    }
    if let Some(s) = samples.iter().find(|s| s.length <= 0.0) {
        return Err(Error::Fit(format!("non-positive length {}", s.length)));
    }
    let n = samples.len() as f64;
    let mean_p = samples.iter().map(|s| s.pressure).sum::<f64>() / n;
    let mean_l = samples.iter().map(|s| s.length).sum::<f64>() / n;
    let (sxx, sxy) = samples.iter().fold((0.0, 0.0), |(sxx, sxy), s| {
        let dp = s.pressure - mean_p;
        (sxx + dp * dp, sxy + dp * (s.length - mean_l))
    });
    let scale = samples.iter().map(|s| s.pressure.abs()).fold(1.0, f64::max);
    if sxx <= (1e-12 * scale).powi(2) * n {
        return Err(Error::Fit("samples share a single pressure".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_p;
    if slope <= 0.0 {
        return Err(Error::Fit(format!(
            "fitted slope {slope} is not positive; map would not be invertible"
        )));
    }
    let lo = samples.iter().map(|s| s.pressure).fold(f64::MAX, f64::min);
    let hi = samples.iter().map(|s| s.pressure).fold(f64::MIN, f64::max);
    let map = PressureLengthMap {
        slope,
        intercept,
        valid_pressure_range: [lo, hi],
    };
    let sse: f64 = samples
        .iter()
        .map(|s| (s.length - map.eval(s.pressure)).powi(2))
        .sum();
    Ok(LinearFit {
        map,
        residual_rms: (sse / n).sqrt(),
    })
}

/// Reads a `pressure_kpa,length_mm` CSV.
pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
