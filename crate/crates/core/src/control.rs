//! Resolved-rate motion control of the control point.
//!
//! Each step moves the chamber lengths along `J⁺ û`, where `û` is the unit
//! direction from the current control point to the target and `J` is the
//! backward-difference Jacobian of the control point with respect to the
//! chamber lengths.

use std::io::Write;

use nalgebra::{Matrix3, Vector3, SVD};
use serde::{Deserialize, Serialize};

use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::kinematics::{control_point, ChamberLengths, DeviceGeometry};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-8;

/// Shorter retries of a step that would saturate a chamber.
const SATURATION_HALVINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Task-space distance covered per iteration along the unit direction.
    pub step_scale_c: f64,
    /// Backward-difference step (mm).
    pub jacobian_delta: f64,
    /// Distance to target treated as arrived (mm).
    pub target_tolerance: f64,
    pub max_iterations: usize,
    /// Damped least-squares factor; `None` uses the plain pseudoinverse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    /// Controller update rate used by the experiment harness (Hz).
    pub tick_rate_hz: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            step_scale_c: 10.0,
            jacobian_delta: 1e-3,
            target_tolerance: 0.05,
            max_iterations: 100,
            damping: None,
            tick_rate_hz: 100.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale_c.is_finite() && self.step_scale_c > 0.0) {
            return Err(Error::Config("step_scale_c must be > 0".into()));
        }
        if !(self.jacobian_delta > 1e-6 && self.jacobian_delta < 1e-2) {
            return Err(Error::Config("jacobian_delta must lie in (1e-6, 1e-2) mm".into()));
        }
        if !(self.target_tolerance.is_finite() && self.target_tolerance > 0.0) {
            return Err(Error::Config("target_tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if let Some(lambda) = self.damping {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::Config("damping must be >= 0".into()));
            }
        }
        if !(self.tick_rate_hz.is_finite() && self.tick_rate_hz > 0.0) {
            return Err(Error::Config("tick_rate_hz must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlStepResult {
    pub new_lengths: ChamberLengths,
    /// kPa, always inside the device limits.
    pub commanded_pressures: [f64; 3],
    pub converged: bool,
    pub saturated: bool,
    /// Model control point at `new_lengths` (mm).
    pub position: [f64; 3],
    /// Distance from `position` to the target (mm).
    pub error: f64,
}

/// Backward-difference Jacobian: column `i` is `(u(l) - u(l - delta e_i)) / delta`.
pub fn numerical_jacobian(
    lengths: &ChamberLengths,
    geom: &DeviceGeometry,
    delta: f64,
) -> Result<Matrix3<f64>> {
    let u0 = control_point(lengths, geom);
    let mut jac = Matrix3::zeros();
    for i in 0..3 {
        let mut back = lengths.as_array();
        back[i] -= delta;
        let back = ChamberLengths::new(back)?;
        jac.set_column(i, &((u0 - control_point(&back, geom)) / delta));
    }
    Ok(jac)
}

/// Moore-Penrose pseudoinverse through the SVD.
pub fn pseudo_inverse(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = SVD::new(*m, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("SVD computed with both singular vector sets"),
    };
    let sigma_max = svd.singular_values.max();
    let cutoff = PINV_RELATIVE_CUTOFF * sigma_max;
    let inv = svd
        .singular_values
        .map(|s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 });
    v_t.transpose() * Matrix3::from_diagonal(&inv) * u.transpose()
}

/// `Jᵀ (J Jᵀ + λ² I)⁻¹`.
pub fn damped_pseudo_inverse(m: &Matrix3<f64>, lambda: f64) -> Matrix3<f64> {
    let jjt = m * m.transpose() + Matrix3::identity() * lambda * lambda;
    match jjt.try_inverse() {
        Some(inv) => m.transpose() * inv,
        None => pseudo_inverse(m),
    }
}

fn finite(v: &Vector3<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn clamp_to_limits(
    lengths: Vector3<f64>,
    model: &DeviceModel,
) -> Result<(ChamberLengths, [f64; 3], bool)> {
    let [lo, hi] = model.pressure_limits();
    let mut saturated = false;
    let mut l = [lengths.x, lengths.y, lengths.z];
    let mut pressures = [0.0; 3];
    for i in 0..3 {
        let map = &model.actuators[i];
        let lo = lo.max(map.valid_pressure_range[0]);
        let hi = hi.min(map.valid_pressure_range[1]);
        let p = map.unclamped_pressure(l[i]);
        if !p.is_finite() {
            return Err(Error::NonFinite("commanded pressure"));
        }
        if p > hi || p < lo {
            let clamped = p.clamp(lo, hi);
            l[i] = map.length_from_pressure(clamped)?;
            pressures[i] = clamped;
            saturated = true;
        } else {
            pressures[i] = p;
        }
    }
    Ok((ChamberLengths::new(l)?, pressures, saturated))
}

/// One resolved-rate update toward `target`.
///
/// Within `target_tolerance` of the target the lengths are returned unchanged
/// and the result is marked converged. Otherwise the lengths move by
/// `c J⁺ û`, shortened so the predicted task-space motion does not pass the
/// target. Pressures beyond the device limits are clamped and the result is
/// marked saturated.
pub fn rrmc_step(
    lengths: &ChamberLengths,
    target: &Vector3<f64>,
    cfg: &ControllerConfig,
    model: &DeviceModel,
) -> Result<ControlStepResult> {
    if !finite(target) {
        return Err(Error::NonFinite("target"));
    }
    let geom = &model.geometry;
    let u = control_point(lengths, geom);
    let offset = target - u;
    let distance = offset.norm();
    if distance <= cfg.target_tolerance {
        let (new_lengths, commanded_pressures, saturated) =
            clamp_to_limits(lengths.as_vector(), model)?;
        return Ok(ControlStepResult {
            new_lengths,
            commanded_pressures,
            converged: true,
            saturated,
            position: u.into(),
            error: distance,
        });
    }
    let direction = offset / distance;
    let jac = numerical_jacobian(lengths, geom, cfg.jacobian_delta)?;
    let pinv = match cfg.damping {
        Some(lambda) if lambda > 0.0 => damped_pseudo_inverse(&jac, lambda),
        _ => pseudo_inverse(&jac),
    };
    let rate = pinv * direction;
    let predicted = (jac * rate).norm() * cfg.step_scale_c;
    let scale = if predicted > distance {
        cfg.step_scale_c * distance / predicted
    } else {
        cfg.step_scale_c
    };
    // A step that leaves the pressure band is retried at half length a few
    // times, so that linearization overshoot toward a reachable target is not
    // reported as saturation. Only when every shorter step also leaves the
    // band is the full step clamped.
    let l0 = lengths.as_vector();
    let mut clamped = clamp_to_limits(l0 + rate * scale, model)?;
    if clamped.2 {
        let mut s = scale;
        for _ in 0..SATURATION_HALVINGS {
            s *= 0.5;
            let trial = clamp_to_limits(l0 + rate * s, model)?;
            if !trial.2 {
                clamped = trial;
                break;
            }
        }
    }
    let (new_lengths, commanded_pressures, saturated) = clamped;
    let position = control_point(&new_lengths, geom);
    Ok(ControlStepResult {
        new_lengths,
        commanded_pressures,
        converged: false,
        saturated,
        position: position.into(),
        error: (target - position).norm(),
    })
}

/// Iterates [`rrmc_step`] until converged or saturated.
pub fn solve_to_target(
    start: &ChamberLengths,
    target: &Vector3<f64>,
    cfg: &ControllerConfig,
    model: &DeviceModel,
) -> Result<Vec<ControlStepResult>> {
    let mut trajectory = Vec::new();
    let mut lengths = *start;
    for _ in 0..cfg.max_iterations {
        let step = rrmc_step(&lengths, target, cfg, model)?;
        trajectory.push(step);
        if step.converged || step.saturated {
            return Ok(trajectory);
        }
        lengths = step.new_lengths;
    }
    Err(Error::NonConvergence { trajectory })
}

/// Stateful wrapper holding the current chamber lengths of one control session.
#[derive(Debug, Clone)]
pub struct ResolvedRateController {
    pub cfg: ControllerConfig,
    pub model: DeviceModel,
    lengths: ChamberLengths,
}

impl ResolvedRateController {
    pub fn new(cfg: ControllerConfig, model: DeviceModel) -> Self {
        Self {
            cfg,
            lengths: model.preload_lengths(),
            model,
        }
    }

    pub fn lengths(&self) -> ChamberLengths {
        self.lengths
    }

    pub fn reset(&mut self, lengths: ChamberLengths) {
        self.lengths = lengths;
    }

    pub fn step(&mut self, target: &Vector3<f64>) -> Result<ControlStepResult> {
        let step = rrmc_step(&self.lengths, target, &self.cfg, &self.model)?;
        self.lengths = step.new_lengths;
        Ok(step)
    }

    /// Runs to convergence or saturation, keeping the final lengths even when
    /// the iteration limit is hit.
    pub fn solve(&mut self, target: &Vector3<f64>) -> Result<Vec<ControlStepResult>> {
        let result = solve_to_target(&self.lengths, target, &self.cfg, &self.model);
        let last = match &result {
            Ok(traj) => traj.last(),
            Err(Error::NonConvergence { trajectory }) => trajectory.last(),
            Err(_) => None,
        };
        if let Some(last) = last {
            self.lengths = last.new_lengths;
        }
        result
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, trajectory: &[ControlStepResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iter", "l1_mm", "l2_mm", "l3_mm", "p1_kpa", "p2_kpa", "p3_kpa", "x_mm", "y_mm", "z_mm",
        "err_mm", "saturated",
    ])?;
    for (i, s) in trajectory.iter().enumerate() {
        let l = s.new_lengths.as_array();
        let p = s.commanded_pressures;
        let u = s.position;
        let mut row = vec![i.to_string()];
        row.extend(
            [l[0], l[1], l[2], p[0], p[1], p[2], u[0], u[1], u[2], s.error].map(|v| v.to_string()),
        );
        row.push(s.saturated.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
