use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bandwidth::{run_bandwidth_experiment, Axis, BandwidthResult};
use super::paths::{run_path_experiment, LevelReport};
use super::reference::REFERENCE_DATASET_VERSION;
use super::targets::Level;
use crate::config::Config;
use crate::error::Result;
use crate::plant::PlantMode;
use crate::workspace::workspace_sweep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Hash of the configuration the report was produced from.
    pub config_hash: String,
    pub seed: u64,
    pub reference_dataset: String,
    pub jnd_position_mm: f64,
    pub jnd_force_n: f64,
    pub workspace_radius_mm: Option<f64>,
    pub levels: Vec<LevelReport>,
    pub bandwidth: Vec<BandwidthResult>,
}

impl ExperimentReport {
    pub fn new(config: &Config, seed: u64) -> Self {
        Self {
            config_hash: config.hash(),
            seed,
            reference_dataset: REFERENCE_DATASET_VERSION.to_string(),
            jnd_position_mm: config.experiment.jnd_position_mm,
            jnd_force_n: config.experiment.jnd_force_n,
            workspace_radius_mm: None,
            levels: Vec::new(),
            bandwidth: Vec::new(),
        }
    }

    /// Paths whose mean error exceeds the JND of their mode.
    pub fn above_jnd(&self) -> impl Iterator<Item = (&LevelReport, &super::PathSummary)> {
        self.levels
            .iter()
            .flat_map(|l| l.paths.iter().map(move |p| (l, p)))
            .filter(|(_, p)| p.above_jnd)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Simulated validation report");
        let _ = writeln!(s, "config hash : {}", self.config_hash);
        let _ = writeln!(s, "seed        : {}", self.seed);
        let _ = writeln!(s, "reference   : {}", self.reference_dataset);
        let _ = writeln!(
            s,
            "JND         : {} mm position, {} N force",
            self.jnd_position_mm, self.jnd_force_n
        );
        if let Some(r) = self.workspace_radius_mm {
            let _ = writeln!(s, "workspace   : max radial extent {r:.3} mm about the preload tip");
        }
        for level in &self.levels {
            let unit = level.unit();
            let _ = writeln!(s);
            let _ = writeln!(s, "== {} / {:?} ({unit}) ==", level.level, level.mode);
            let _ = writeln!(
                s,
                "{:>6} {:>9} {:>9} {:>17} {:>17} {:>6}",
                "path", "range", "hw range", "error", "hw error", "JND"
            );
            for p in &level.paths {
                let (hw_range, hw_err) = match (&p.reference, level.mode) {
                    (Some(r), PlantMode::Free) => (r.position_range_mm, r.position_error_mm),
                    (Some(r), PlantMode::Blocked) => (r.force_range_n, r.force_error_n),
                    (None, _) => (f64::NAN, (f64::NAN, f64::NAN)),
                };
                let flag = if p.above_jnd { "ABOVE" } else { "below" };
                let _ = writeln!(
                    s,
                    "{:>6} {:>9.3} {:>9.2} {:>8.3} ± {:<6.3} {:>8.2} ± {:<6.2} {:>6}{}",
                    p.label,
                    p.range,
                    hw_range,
                    p.error.mean,
                    p.error.std,
                    hw_err.0,
                    hw_err.1,
                    flag,
                    if p.saturated && level.mode == PlantMode::Free { " (saturated)" } else { "" },
                );
            }
        }
        for bw in &self.bandwidth {
            let _ = writeln!(s);
            let _ = writeln!(s, "== bandwidth {} / {:?} ==", bw.axis, bw.mode);
            for row in &bw.rows {
                match (row.magnitude_ratio, &row.error) {
                    (Some(m), _) => {
                        let _ = writeln!(s, "{:>6.1} Hz  MR {:.4}", row.frequency_hz, m);
                    }
                    (None, Some(e)) => {
                        let _ = writeln!(s, "{:>6.1} Hz  invalid: {e}", row.frequency_hz);
                    }
                    (None, None) => {}
                }
            }
            match bw.crossing_hz {
                Some(f) => {
                    let _ = writeln!(s, "-3 dB crossing: {f:.3} Hz");
                }
                None => {
                    let _ = writeln!(s, "-3 dB crossing: not within the grid");
                }
            }
        }
        let above: Vec<_> = self.above_jnd().collect();
        let _ = writeln!(s);
        if above.is_empty() {
            let _ = writeln!(s, "All simulated path errors are below the JND.");
        } else {
            for (level, p) in above {
                let _ = writeln!(
                    s,
                    "ABOVE JND: {} {:?} path {} mean error {:.3} {}",
                    level.level,
                    level.mode,
                    p.label,
                    p.error.mean,
                    level.unit()
                );
            }
        }
        s
    }
}

/// Every level in both modes, free-motion bandwidth on every axis and the
/// workspace sweep.
pub fn run_full_campaign(config: &Config, seed: u64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config, seed);
    let model = config.device_model()?;
    report.workspace_radius_mm =
        Some(workspace_sweep(&model, config.experiment.workspace_grid_steps)?.max_radius);
    for mode in [PlantMode::Free, PlantMode::Blocked] {
        for level in Level::ALL {
            report.levels.push(run_path_experiment(level, mode, config, seed)?.0);
        }
    }
    for axis in Axis::ALL {
        report
            .bandwidth
            .push(run_bandwidth_experiment(axis, PlantMode::Free, config, seed)?);
    }
    Ok(report)
}
