//! Simulated validation campaign: path following, blocked-force pushes and
//! frequency response, with reports against the bundled hardware dataset.

mod bandwidth;
mod paths;
pub mod reference;
mod report;
mod rig;
mod sine;
mod stats;
mod targets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bandwidth::{
    frequency_grid, minus_3db_crossing, run_bandwidth_experiment, run_frequency, write_bandwidth_csv,
    Axis,
    BandwidthResult, BandwidthRow,
};
pub use paths::{
    calibrate_block_stiffness, run_path_experiment, run_single_path, LevelReport, PathRun,
    PathSummary, StiffnessCalibration, REFERENCE_AXIAL_FORCE, REFERENCE_LATERAL_FORCE,
};
pub use report::{run_full_campaign, ExperimentReport};
pub use sine::{fit_sine, magnitude_ratio, SineFit};
pub use stats::{path_error, radial_range, PathErrorStats};
pub use targets::{circle_target, generate_targets, Level, PathTargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Tracker sampling rate (Hz).
    pub sample_rate_hz: f64,
    /// Runs per commanded direction, averaged.
    pub repetitions: usize,
    /// Waypoint speed along a path (mm/s).
    pub path_speed_mm_s: f64,
    /// Time held at the end of a path (s).
    pub hold_time_s: f64,
    /// How far blocked pushes command past the preload tip (mm).
    pub push_distance_mm: f64,
    pub bandwidth_amplitude_mm: f64,
    /// Discarded start of each frequency run (s).
    pub bandwidth_settle_s: f64,
    /// Periods recorded per frequency, subject to `bandwidth_min_record_s`.
    pub bandwidth_periods: f64,
    pub bandwidth_min_record_s: f64,
    /// Fingertip displacement JND (mm).
    pub jnd_position_mm: f64,
    /// Finger force JND (N).
    pub jnd_force_n: f64,
    pub workspace_grid_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 56.0,
            repetitions: 3,
            path_speed_mm_s: 2.0,
            hold_time_s: 1.0,
            push_distance_mm: 20.0,
            bandwidth_amplitude_mm: 3.0,
            bandwidth_settle_s: 1.0,
            bandwidth_periods: 3.0,
            bandwidth_min_record_s: 2.0,
            jnd_position_mm: 1.74,
            jnd_force_n: 0.224,
            workspace_grid_steps: 11,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate_hz", self.sample_rate_hz),
            ("path_speed_mm_s", self.path_speed_mm_s),
            ("push_distance_mm", self.push_distance_mm),
            ("bandwidth_amplitude_mm", self.bandwidth_amplitude_mm),
            ("bandwidth_periods", self.bandwidth_periods),
            ("bandwidth_min_record_s", self.bandwidth_min_record_s),
            ("jnd_position_mm", self.jnd_position_mm),
            ("jnd_force_n", self.jnd_force_n),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        for (name, v) in [
            ("hold_time_s", self.hold_time_s),
            ("bandwidth_settle_s", self.bandwidth_settle_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.workspace_grid_steps < 2 {
            return Err(Error::Config("workspace_grid_steps must be >= 2".into()));
        }
        Ok(())
    }
}
