//! Simulated device: regulator lag, chamber response, free and blocked modes.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::kinematics::{ArcParams, ChamberLengths, TipPose};

/// Axial stiffness: 6.01 N blocked force over the 5.75 mm simulated Z− stroke.
pub const DEFAULT_STIFFNESS_AXIAL: f64 = 6.01 / 5.75;
/// Lateral stiffness: 1.01 N blocked force over the simulated stroke of the
/// 30 degree middle-level push (see `experiments::calibrate_block_stiffness`).
pub const DEFAULT_STIFFNESS_LATERAL: f64 = 0.139_426;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    Free,
    Blocked,
}

impl std::str::FromStr for PlantMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(PlantMode::Free),
            "blocked" => Ok(PlantMode::Blocked),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// First-order regulator time constant (s).
    pub regulator_time_constant_tau: f64,
    /// Integration step (s).
    pub tick_dt: f64,
    pub mode: PlantMode,
    /// Blocking point (mm); the preload tip when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_anchor: Option<[f64; 3]>,
    /// N/mm.
    pub stiffness_lateral: f64,
    /// N/mm.
    pub stiffness_axial: f64,
    /// Per-chamber multiplier on the map slope.
    pub chamber_gain_asymmetry: [f64; 3],
    /// Standard deviation of the noise on the reported tip (mm).
    pub measurement_noise_sigma: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            regulator_time_constant_tau: 0.053,
            tick_dt: 0.01,
            mode: PlantMode::Free,
            block_anchor: None,
            stiffness_lateral: DEFAULT_STIFFNESS_LATERAL,
            stiffness_axial: DEFAULT_STIFFNESS_AXIAL,
            chamber_gain_asymmetry: [1.0; 3],
            measurement_noise_sigma: 0.05,
        }
    }
}

impl PlantConfig {
    /// Noise-free, symmetric plant.
    pub fn ideal() -> Self {
        Self {
            measurement_noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn with_mode(self, mode: PlantMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let tau = self.regulator_time_constant_tau;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Config("regulator_time_constant_tau must be > 0".into()));
        }
        if !(self.tick_dt.is_finite() && self.tick_dt > 0.0 && self.tick_dt < tau / 2.0) {
            return Err(Error::Config("tick_dt must lie in (0, tau/2)".into()));
        }
        if !(self.stiffness_lateral > 0.0 && self.stiffness_axial > 0.0) {
            return Err(Error::Config("stiffnesses must be > 0".into()));
        }
        if self
            .chamber_gain_asymmetry
            .iter()
            .any(|a| !(0.8..=1.2).contains(a))
        {
            return Err(Error::Config(
                "chamber_gain_asymmetry factors must lie in [0.8, 1.2]".into(),
            ));
        }
        if !(self.measurement_noise_sigma.is_finite() && self.measurement_noise_sigma >= 0.0) {
            return Err(Error::Config("measurement_noise_sigma must be >= 0".into()));
        }
        if let Some(a) = self.block_anchor {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("block_anchor"));
            }
        }
        Ok(())
    }

    fn stiffness(&self) -> Vector3<f64> {
        Vector3::new(
            self.stiffness_lateral,
            self.stiffness_lateral,
            self.stiffness_axial,
        )
    }
}

/// `diag(k_lat, k_lat, k_ax) (u_free - anchor)`.
pub fn block_force(
    free_tip: &Vector3<f64>,
    anchor: &Vector3<f64>,
    cfg: &PlantConfig,
) -> Vector3<f64> {
    cfg.stiffness().component_mul(&(free_tip - anchor))
}

/// Spreads the chamber gains by up to `0.2 * severity` around 1, drawn from a
/// generator seeded with `seed`.
pub fn apply_degradation(cfg: &PlantConfig, severity: f64, seed: u64) -> Result<PlantConfig> {
    if !(0.0..=1.0).contains(&severity) {
        return Err(Error::InvalidInput(format!(
            "severity must lie in [0, 1], got {severity}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut asym = [1.0; 3];
    for a in &mut asym {
        let u: f64 = rng.random_range(-1.0..=1.0);
        *a = 1.0 + 0.2 * severity * u;
    }
    Ok(PlantConfig {
        chamber_gain_asymmetry: asym,
        ..*cfg
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub actual_pressures: [f64; 3],
    pub commanded_pressures: [f64; 3],
    /// Unconstrained chamber lengths for the actual pressures.
    pub lengths: ChamberLengths,
    pub arc: ArcParams,
    /// Noise-free tip pose; held at the anchor in blocked mode.
    pub tip: TipPose,
    /// Reported tip position including measurement noise (mm).
    pub measured_tip: Vector3<f64>,
    /// Zero in free mode (N).
    pub block_force: Vector3<f64>,
    pub time: f64,
}

/// One simulated device, advanced by [`Plant::step`].
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: PlantConfig,
    model: DeviceModel,
    state: PlantState,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Plant {
    /// Starts settled at the preload pressures.
    pub fn new(cfg: PlantConfig, model: DeviceModel, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let noise = if cfg.measurement_noise_sigma > 0.0 {
            Some(
                Normal::new(0.0, cfg.measurement_noise_sigma)
                    .map_err(|e| Error::Config(e.to_string()))?,
            )
        } else {
            None
        };
        let mut plant = Self {
            cfg,
            model,
            state: PlantState {
                actual_pressures: [0.0; 3],
                commanded_pressures: [0.0; 3],
                lengths: model.preload_lengths(),
                arc: model.arc(&model.preload_lengths()),
                tip: model.pose(&model.preload_lengths()),
                measured_tip: Vector3::zeros(),
                block_force: Vector3::zeros(),
                time: 0.0,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
        };
        let preload = model.preload_pressures().map(|p| p.clamp(model.geometry.pressure_min, model.geometry.pressure_max));
        plant.state.actual_pressures = preload;
        plant.state.commanded_pressures = preload;
        plant.refresh()?;
        Ok(plant)
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn model(&self) -> &DeviceModel {
        &self.model
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn anchor(&self) -> Vector3<f64> {
        self.cfg
            .block_anchor
            .map(Vector3::from)
            .unwrap_or_else(|| self.model.preload_tip())
    }

    /// Chamber lengths with the per-chamber gain asymmetry applied.
    fn plant_lengths(&self, pressures: &[f64; 3]) -> Result<ChamberLengths> {
        let mut l = [0.0; 3];
        for i in 0..3 {
            let map = &self.model.actuators[i];
            l[i] = map.intercept + self.cfg.chamber_gain_asymmetry[i] * map.slope * pressures[i];
        }
        ChamberLengths::new(l)
    }

    fn refresh(&mut self) -> Result<()> {
        let lengths = self.plant_lengths(&self.state.actual_pressures)?;
        let arc = self.model.arc(&lengths);
        let free = crate::kinematics::tip_pose(&arc);
        let (tip, force) = match self.cfg.mode {
            PlantMode::Free => (free, Vector3::zeros()),
            PlantMode::Blocked => {
                let anchor = self.anchor();
                let force = block_force(&free.control_point_u, &anchor, &self.cfg);
                let held = TipPose {
                    position: anchor,
                    control_point_u: anchor,
                    ..free
                };
                (held, force)
            }
        };
        let mut measured = tip.control_point_u;
        if let Some(noise) = &self.noise {
            for v in measured.iter_mut() {
                *v += noise.sample(&mut self.rng);
            }
        }
        self.state.lengths = lengths;
        self.state.arc = arc;
        self.state.tip = tip;
        self.state.measured_tip = measured;
        self.state.block_force = force;
        Ok(())
    }

    /// Advances one tick toward `commanded` (clamped to the device limits).
    ///
    /// The regulator is integrated exactly for a command held over the tick,
    /// so the pressure error shrinks by `exp(-dt / tau)` per tick.
    pub fn step(&mut self, commanded: &[f64; 3]) -> Result<&PlantState> {
        if commanded.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("commanded pressure"));
        }
        let [lo, hi] = self.model.pressure_limits();
        let cmd = commanded.map(|p| p.clamp(lo, hi));
        let alpha = 1.0 - (-self.cfg.tick_dt / self.cfg.regulator_time_constant_tau).exp();
        for (p, c) in self.state.actual_pressures.iter_mut().zip(cmd) {
            *p = (*p + alpha * (c - *p)).clamp(lo, hi);
        }
        self.state.commanded_pressures = cmd;
        self.state.time += self.cfg.tick_dt;
        self.refresh()?;
        Ok(&self.state)
    }
}

/// Writes `t_s,p1_cmd,...,fz_n` rows.
pub fn write_plant_trace_csv<W: Write>(out: W, states: &[PlantState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_s", "p1_cmd", "p2_cmd", "p3_cmd", "p1_act", "p2_act", "p3_act", "x_mm", "y_mm", "z_mm",
        "fx_n", "fy_n", "fz_n",
    ])?;
    for s in states {
        let c = s.commanded_pressures;
        let a = s.actual_pressures;
        let u = s.measured_tip;
        let f = s.block_force;
        w.write_record(
            [
                s.time, c[0], c[1], c[2], a[0], a[1], a[2], u.x, u.y, u.z, f.x, f.y, f.z,
            ]
            .map(|v| v.to_string()),
        )?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
