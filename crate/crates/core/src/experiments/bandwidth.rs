//! Frequency response of the controller and plant chain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::rig::{Rig, Sampler};
use super::sine::{fit_sine, magnitude_ratio, SineFit};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::plant::PlantMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(&self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(&self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!("unknown axis {other:?}"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// 0.1 Hz, 0.5 Hz, 1 to 4 Hz every 0.5 Hz, then 5 to 10 Hz every 1 Hz.
pub fn frequency_grid() -> Vec<f64> {
    let mut grid = vec![0.1, 0.5];
    grid.extend((0..7).map(|i| 1.0 + 0.5 * i as f64));
    grid.extend((5..=10).map(f64::from));
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRow {
    pub frequency_hz: f64,
    pub fit: Option<SineFit>,
    pub magnitude_ratio: Option<f64>,
    /// Why the row is invalid, when the fit failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthResult {
    pub axis: Axis,
    pub mode: PlantMode,
    pub rows: Vec<BandwidthRow>,
    /// First -3 dB crossing; `None` when the response never drops below it
    /// on the grid (or starts below it).
    pub crossing_hz: Option<f64>,
}

/// Interpolates the first `MR = 1/sqrt(2)` crossing with the magnitude ratio
/// linear in log frequency between the bracketing valid rows.
pub fn minus_3db_crossing(rows: &[BandwidthRow]) -> Option<f64> {
    let valid: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.magnitude_ratio.map(|m| (r.frequency_hz, m)))
        .collect();
    if valid.first().is_some_and(|&(_, m)| m < FRAC_1_SQRT_2) {
        return None;
    }
    valid.windows(2).find_map(|w| {
        let (f0, m0) = w[0];
        let (f1, m1) = w[1];
        if m0 >= FRAC_1_SQRT_2 && m1 < FRAC_1_SQRT_2 {
            let frac = (m0 - FRAC_1_SQRT_2) / (m0 - m1);
            Some((f0.ln() + frac * (f1.ln() - f0.ln())).exp())
        } else {
            None
        }
    })
}

/// Commands a sinusoid of `bandwidth_amplitude_mm` about the preload tip along
/// `axis` at `frequency`, samples the response at the tracker rate after the
/// settling time and fits a sine. In blocked mode the block force on `axis` is
/// fitted against the commanded amplitude times the axis stiffness.
pub fn run_frequency(
    axis: Axis,
    mode: PlantMode,
    frequency: f64,
    config: &Config,
    seed: u64,
) -> Result<BandwidthRow> {
    let model = config.device_model()?;
    let exp = &config.experiment;
    let plant_cfg = config.plant.with_mode(mode);
    let mut rig = Rig::new(model, config.controller, plant_cfg, seed)?;
    let center = model.preload_tip();
    let amplitude = exp.bandwidth_amplitude_mm;
    let record = (exp.bandwidth_periods / frequency).max(exp.bandwidth_min_record_s);
    let end = exp.bandwidth_settle_s + record;
    let mut sampler = Sampler::new(exp.sample_rate_hz, exp.bandwidth_settle_s);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    let k = axis.index();
    while rig.time() < end {
        let t = rig.time();
        let target = center + axis.unit() * amplitude * (2.0 * PI * frequency * t).sin();
        let state = *rig.tick(&target, false)?;
        if state.time >= exp.bandwidth_settle_s && sampler.due(state.time) {
            times.push(state.time);
            values.push(match mode {
                PlantMode::Free => state.measured_tip[k],
                PlantMode::Blocked => state.block_force[k],
            });
        }
    }
    let commanded = match (mode, axis) {
        (PlantMode::Free, _) => amplitude,
        (PlantMode::Blocked, Axis::Z) => amplitude * plant_cfg.stiffness_axial,
        (PlantMode::Blocked, _) => amplitude * plant_cfg.stiffness_lateral,
    };
    Ok(match fit_sine(&times, &values, frequency) {
        Ok(fit) => BandwidthRow {
            frequency_hz: frequency,
            magnitude_ratio: Some(magnitude_ratio(&fit, commanded)?),
            fit: Some(fit),
            error: None,
        },
        Err(e) => BandwidthRow {
            frequency_hz: frequency,
            fit: None,
            magnitude_ratio: None,
            error: Some(e.to_string()),
        },
    })
}

pub fn run_bandwidth_experiment(
    axis: Axis,
    mode: PlantMode,
    config: &Config,
    seed: u64,
) -> Result<BandwidthResult> {
    let rows = frequency_grid()
        .into_iter()
        .map(|f| run_frequency(axis, mode, f, config, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandwidthResult {
        axis,
        mode,
        crossing_hz: minus_3db_crossing(&rows),
        rows,
    })
}

/// One row per frequency; invalid rows keep empty numeric fields and the
/// fit error message.
pub fn write_bandwidth_csv<W: Write>(out: W, result: &BandwidthResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "frequency_hz",
        "amplitude",
        "fitted_frequency_hz",
        "phase_rad",
        "offset",
        "residual_rms",
        "magnitude_ratio",
        "error",
    ])?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &result.rows {
        let fit = row.fit.as_ref();
        w.write_record([
            row.frequency_hz.to_string(),
            num(fit.map(|f| f.amplitude_a)),
            num(fit.map(|f| f.frequency_f)),
            num(fit.map(|f| f.phase_phi)),
            num(fit.map(|f| f.offset_x0)),
            num(fit.map(|f| f.residual_rms)),
            num(row.magnitude_ratio),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
