//! Reachable control points over the full pressure grid.

use std::io::Write;

use nalgebra::Vector3;

use crate::device::DeviceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspacePoint {
    pub pressures: [f64; 3],
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceCloud {
    pub points: Vec<WorkspacePoint>,
    /// Control point at the preload configuration.
    pub center: Vector3<f64>,
    /// Largest distance of any grid point from `center` (mm).
    pub max_radius: f64,
}

impl WorkspaceCloud {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p1_kpa", "p2_kpa", "p3_kpa", "x_mm", "y_mm", "z_mm"])?;
        for pt in &self.points {
            let [p1, p2, p3] = pt.pressures;
            let u = pt.position;
            w.write_record(
                [p1, p2, p3, u.x, u.y, u.z].map(|v| v.to_string()),
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Sweeps every chamber over `grid_steps` evenly spaced pressures between the
/// device limits.
pub fn workspace_sweep(model: &DeviceModel, grid_steps: usize) -> Result<WorkspaceCloud> {
    if grid_steps < 2 {
        return Err(Error::InvalidInput(format!(
            "grid_steps must be >= 2, got {grid_steps}"
        )));
    }
    let [lo, hi] = model.pressure_limits();
    let grid: Vec<f64> = (0..grid_steps)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_steps - 1) as f64)
        .collect();
    let center = model.preload_tip();
    let mut points = Vec::with_capacity(grid_steps.pow(3));
    let mut max_radius = 0.0f64;
    for &p1 in &grid {
        for &p2 in &grid {
            for &p3 in &grid {
                let pressures = [p1, p2, p3];
                let position = model.forward_kinematics(&pressures)?.control_point_u;
                max_radius = max_radius.max((position - center).norm());
                points.push(WorkspacePoint {
                    pressures,
                    position,
                });
            }
        }
    }
    Ok(WorkspaceCloud {
        points,
        center,
        max_radius,
    })
}
