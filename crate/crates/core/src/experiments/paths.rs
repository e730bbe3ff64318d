//! Straight-line path following and blocked-force pushes toward each target.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::reference::{reference_row, ReferenceRow};
use super::rig::{Rig, Sampler};
use super::stats::{path_error, radial_range, PathErrorStats};
use super::targets::{generate_targets, Level, MIDDLE_CIRCLE_RADIUS};
use super::ExperimentConfig;
use crate::config::Config;
use crate::control::ControllerConfig;
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::plant::{PlantConfig, PlantMode, PlantState};

/// One run along one commanded direction.
#[derive(Debug, Clone)]
pub struct PathRun {
    /// Commanded offset from the preload tip (mm).
    pub offset: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub mode: PlantMode,
    /// Sample instants (s).
    pub times: Vec<f64>,
    /// Tip positions (free, mm) or block forces (blocked, N).
    pub samples: Vec<Vector3<f64>>,
    /// Line origin and sphere center the samples are measured against.
    pub center: Vector3<f64>,
    pub range: f64,
    pub error: PathErrorStats,
    pub saturated: bool,
    pub nonconverged_steps: usize,
    /// Every plant tick, for trace output.
    pub trace: Vec<PlantState>,
}

/// Moves a waypoint from the preload tip along `offset` at the configured
/// path speed, solving the controller to the waypoint each control tick.
///
/// Free mode stops the waypoint at the target; blocked mode keeps pushing to
/// `push_distance_mm` and freezes the command at the first pressure
/// saturation. The run then holds for `hold_time_s`.
pub fn run_single_path(
    model: &DeviceModel,
    ctrl: &ControllerConfig,
    plant_cfg: &PlantConfig,
    exp: &ExperimentConfig,
    offset: Vector3<f64>,
    seed: u64,
) -> Result<PathRun> {
    let distance = offset.norm();
    if distance == 0.0 || !distance.is_finite() {
        return Err(Error::InvalidInput("path offset must be non-zero".into()));
    }
    let direction = offset / distance;
    let mode = plant_cfg.mode;
    let mut rig = Rig::new(*model, *ctrl, *plant_cfg, seed)?;
    let start = model.preload_tip();
    let stroke = match mode {
        PlantMode::Free => distance,
        PlantMode::Blocked => exp.push_distance_mm.max(distance),
    };
    let ramp_time = stroke / exp.path_speed_mm_s;
    let freeze = mode == PlantMode::Blocked;
    let mut sampler = Sampler::new(exp.sample_rate_hz, 0.0);
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut trace = Vec::new();
    let mut hold_from: Option<f64> = None;
    loop {
        let t = rig.time();
        let travelled = (exp.path_speed_mm_s * t).min(stroke);
        let waypoint = start + direction * travelled;
        if hold_from.is_none() && (t >= ramp_time || (freeze && rig.saturated)) {
            hold_from = Some(t);
        }
        if let Some(h) = hold_from {
            if t >= h + exp.hold_time_s {
                break;
            }
        }
        let state = *rig.tick(&waypoint, freeze)?;
        if sampler.due(state.time) {
            times.push(state.time);
            samples.push(match mode {
                PlantMode::Free => state.measured_tip,
                PlantMode::Blocked => state.block_force,
            });
        }
        trace.push(state);
    }
    let center = match mode {
        PlantMode::Free => start,
        PlantMode::Blocked => Vector3::zeros(),
    };
    Ok(PathRun {
        offset,
        direction,
        mode,
        range: radial_range(&samples, &center)?,
        error: path_error(&samples, &center, &direction)?,
        times,
        samples,
        center,
        saturated: rig.saturated,
        nonconverged_steps: rig.nonconverged_steps,
        trace,
    })
}

/// Aggregated result for one commanded direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub label: String,
    pub angle_deg: Option<f64>,
    /// Mean over repetitions of the radial range (mm or N).
    pub range: f64,
    pub error: PathErrorStats,
    /// Mean path error exceeds the just-noticeable difference.
    pub above_jnd: bool,
    pub saturated: bool,
    pub nonconverged_steps: usize,
    pub reference: Option<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: Level,
    pub mode: PlantMode,
    /// JND the path errors are compared against (mm or N).
    pub jnd: f64,
    pub paths: Vec<PathSummary>,
}

impl LevelReport {
    pub fn unit(&self) -> &'static str {
        match self.mode {
            PlantMode::Free => "mm",
            PlantMode::Blocked => "N",
        }
    }
}

/// Every target of `level` in `mode`, repeated `repetitions` times with
/// consecutive seeds. Runs are returned alongside the summaries.
pub fn run_path_experiment(
    level: Level,
    mode: PlantMode,
    config: &Config,
    seed: u64,
) -> Result<(LevelReport, Vec<Vec<PathRun>>)> {
    let model = config.device_model()?;
    let plant_cfg = config.plant.with_mode(mode);
    let exp = &config.experiment;
    let set = generate_targets(level);
    let jnd = match mode {
        PlantMode::Free => exp.jnd_position_mm,
        PlantMode::Blocked => exp.jnd_force_n,
    };
    let mut paths = Vec::new();
    let mut all_runs = Vec::new();
    for (i, target) in set.targets.iter().enumerate() {
        let mut runs = Vec::new();
        for rep in 0..exp.repetitions {
            let run = run_single_path(
                &model,
                &config.controller,
                &plant_cfg,
                exp,
                Vector3::from(*target),
                seed.wrapping_add(rep as u64),
            )?;
            runs.push(run);
        }
        let errors: Vec<PathErrorStats> = runs.iter().map(|r| r.error).collect();
        let error = PathErrorStats::aggregate(&errors)
            .ok_or_else(|| Error::Config("repetitions must be >= 1".into()))?;
        let range = runs.iter().map(|r| r.range).sum::<f64>() / runs.len() as f64;
        let label = set.label(i);
        paths.push(PathSummary {
            reference: reference_row(level, &label),
            label,
            angle_deg: set.angle(i),
            range,
            above_jnd: error.mean > jnd,
            error,
            saturated: runs.iter().any(|r| r.saturated),
            nonconverged_steps: runs.iter().map(|r| r.nonconverged_steps).sum(),
        });
        all_runs.push(runs);
    }
    Ok((
        LevelReport {
            level,
            mode,
            jnd,
            paths,
        },
        all_runs,
    ))
}

/// Blocked-force magnitudes for unit stiffness along the Z− path and the
/// 30 degree middle path, i.e. the simulated displacement the stiffness has
/// to scale to the reference forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessCalibration {
    pub axial_stroke_mm: f64,
    pub lateral_stroke_mm: f64,
    pub stiffness_axial: f64,
    pub stiffness_lateral: f64,
}

/// Reference blocked forces the default stiffness reproduces (N).
pub const REFERENCE_AXIAL_FORCE: f64 = 6.01;
pub const REFERENCE_LATERAL_FORCE: f64 = 1.01;

pub fn calibrate_block_stiffness(config: &Config) -> Result<StiffnessCalibration> {
    let model = config.device_model()?;
    let plant_cfg = PlantConfig {
        stiffness_axial: 1.0,
        stiffness_lateral: 1.0,
        measurement_noise_sigma: 0.0,
        chamber_gain_asymmetry: [1.0; 3],
        ..config.plant.with_mode(PlantMode::Blocked)
    };
    let exp = &config.experiment;
    let axial = run_single_path(
        &model,
        &config.controller,
        &plant_cfg,
        exp,
        Vector3::new(0.0, 0.0, -1.0),
        0,
    )?;
    let a = 30f64.to_radians();
    let lateral = run_single_path(
        &model,
        &config.controller,
        &plant_cfg,
        exp,
        Vector3::new(a.cos(), a.sin(), 0.0) * MIDDLE_CIRCLE_RADIUS,
        0,
    )?;
    Ok(StiffnessCalibration {
        axial_stroke_mm: axial.range,
        lateral_stroke_mm: lateral.range,
        stiffness_axial: REFERENCE_AXIAL_FORCE / axial.range,
        stiffness_lateral: REFERENCE_LATERAL_FORCE / lateral.range,
    })
}
