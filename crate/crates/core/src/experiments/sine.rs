//! Sinusoid fitting `x(t) = A sin(2 pi f t + phi) + x0` by Levenberg-Marquardt.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub amplitude_a: f64,
    pub frequency_f: f64,
    /// In (-pi, pi].
    pub phase_phi: f64,
    pub offset_x0: f64,
    pub residual_rms: f64,
}

impl SineFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude_a * (2.0 * PI * self.frequency_f * t + self.phase_phi).sin() + self.offset_x0
    }
}

fn model(p: &Vector4<f64>, t: f64) -> f64 {
    p[0] * (2.0 * PI * p[1] * t + p[2]).sin() + p[3]
}

fn sse(p: &Vector4<f64>, times: &[f64], values: &[f64]) -> f64 {
    times
        .iter()
        .zip(values)
        .map(|(&t, &x)| (x - model(p, t)).powi(2))
        .sum()
}

fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Phase at `freq` from the linear projection onto sin/cos/constant.
fn initial_phase(times: &[f64], values: &[f64], freq: f64) -> f64 {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (&t, &x) in times.iter().zip(values) {
        let w = 2.0 * PI * freq * t;
        let row = Vector3::new(w.sin(), w.cos(), 1.0);
        ata += row * row.transpose();
        atb += row * x;
    }
    match ata.try_inverse() {
        Some(inv) => {
            let c = inv * atb;
            c[1].atan2(c[0])
        }
        None => 0.0,
    }
}

/// Nonlinear least-squares sine fit starting from `f_init`, the signal mean
/// and half the peak-to-peak span.
pub fn fit_sine(times: &[f64], values: &[f64], f_init: f64) -> Result<SineFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput("times and values differ in length".into()));
    }
    if times.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", times.len())));
    }
    if !(f_init.is_finite() && f_init > 0.0) {
        return Err(Error::InvalidInput(format!("f_init must be > 0, got {f_init}")));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sine fit input"));
    }
    let t0 = times.iter().copied().fold(f64::MAX, f64::min);
    let t1 = times.iter().copied().fold(f64::MIN, f64::max);
    if (t1 - t0) * f_init < 1.0 - 1e-9 {
        return Err(Error::Fit(format!(
            "samples span {:.4} s, less than one period at {f_init} Hz",
            t1 - t0
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let lo = values.iter().copied().fold(f64::MAX, f64::min);
    let hi = values.iter().copied().fold(f64::MIN, f64::max);
    let half_span = 0.5 * (hi - lo);
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if half_span <= 1e-12 * scale {
        return Err(Error::Fit("signal is constant; frequency is unidentifiable".into()));
    }

    let mut p = Vector4::new(half_span, f_init, initial_phase(times, values, f_init), mean);
    let mut cost = sse(&p, times, values);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&t, &x) in times.iter().zip(values) {
            let w = 2.0 * PI * p[1] * t + p[2];
            let (s, c) = w.sin_cos();
            let grad = Vector4::new(s, p[0] * c * 2.0 * PI * t, p[0] * c, 1.0);
            jtj += grad * grad.transpose();
            jtr += grad * (x - model(&p, t));
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = p + delta;
            let candidate_cost = sse(&candidate, times, values);
            if candidate_cost <= cost {
                let small_step = delta.iter().zip(p.iter()).all(|(d, v)| d.abs() <= 1e-12 * (1.0 + v.abs()));
                let small_gain = cost - candidate_cost <= 1e-15 * (cost + 1e-300);
                p = candidate;
                cost = candidate_cost;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            // No downhill step left at any damping: a local minimum.
            converged = true;
            break;
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) || p[1] <= 0.0 {
        return Err(Error::Fit(format!(
            "sine fit did not converge (f = {}, rms = {})",
            p[1],
            (cost / n).sqrt()
        )));
    }
    let (amplitude, phase) = if p[0] < 0.0 { (-p[0], p[2] + PI) } else { (p[0], p[2]) };
    Ok(SineFit {
        amplitude_a: amplitude,
        frequency_f: p[1],
        phase_phi: wrap(phase),
        offset_x0: p[3],
        residual_rms: (cost / n).sqrt(),
    })
}

/// Fitted amplitude over commanded amplitude.
pub fn magnitude_ratio(fit: &SineFit, commanded_amplitude: f64) -> Result<f64> {
    if !(commanded_amplitude.is_finite() && commanded_amplitude > 0.0) {
        return Err(Error::InvalidInput(format!(
            "commanded amplitude must be > 0, got {commanded_amplitude}"
        )));
    }
    Ok(fit.amplitude_a / commanded_amplitude)
}
