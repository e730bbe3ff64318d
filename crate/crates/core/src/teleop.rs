//! Virtual-cube interaction rendered as fingertip displacement.
//!
//! A cursor pressing into the cube produces a penalty force; the force is
//! scaled into a commanded tip offset from the preload configuration, and the
//! resolved-rate controller drives the simulated device toward it. Everything
//! here is transport-free; the network service wraps [`Session`].

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::control::{ControllerConfig, ResolvedRateController};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::kinematics::ArcParams;
use crate::plant::{Plant, PlantConfig, PlantState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirtualScene {
    /// Scene units.
    pub cube_center: [f64; 3],
    pub cube_half_extent: f64,
    /// N per scene unit of penetration.
    pub wall_stiffness: f64,
}

impl Default for VirtualScene {
    fn default() -> Self {
        Self {
            cube_center: [0.0; 3],
            cube_half_extent: 1.0,
            wall_stiffness: 10.0,
        }
    }
}

impl VirtualScene {
    pub fn validate(&self) -> Result<()> {
        if self.cube_center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cube_center"));
        }
        if !(self.cube_half_extent.is_finite() && self.cube_half_extent > 0.0) {
            return Err(Error::Config("cube_half_extent must be > 0".into()));
        }
        if !(self.wall_stiffness.is_finite() && self.wall_stiffness > 0.0) {
            return Err(Error::Config("wall_stiffness must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleopConfig {
    /// Session tick rate (Hz).
    pub session_rate_hz: f64,
    /// Contact force per millimetre of commanded displacement (N/mm).
    pub force_per_mm: f64,
    /// Bound on the commanded offset from the preload tip (mm).
    pub workspace_radius_mm: f64,
    /// Arrival tolerance for the session controller (mm). Tighter than the
    /// experiment default so that 1 mm scale offsets are rendered to within
    /// a fraction of a percent.
    pub target_tolerance_mm: f64,
    pub scene: VirtualScene,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        Self {
            session_rate_hz: 60.0,
            force_per_mm: 4.75,
            workspace_radius_mm: 5.0,
            target_tolerance_mm: 0.005,
            scene: VirtualScene::default(),
        }
    }
}

impl TeleopConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("session_rate_hz", self.session_rate_hz),
            ("force_per_mm", self.force_per_mm),
            ("workspace_radius_mm", self.workspace_radius_mm),
            ("target_tolerance_mm", self.target_tolerance_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        self.scene.validate()
    }
}

/// Penalty force pushing the cursor out through the face of least
/// penetration; zero outside the cube.
pub fn contact_force(cursor: &Vector3<f64>, scene: &VirtualScene) -> Vector3<f64> {
    let rel = cursor - Vector3::from(scene.cube_center);
    let h = scene.cube_half_extent;
    if rel.iter().any(|c| c.abs() >= h) {
        return Vector3::zeros();
    }
    let mut best_axis = 0;
    let mut best_depth = f64::INFINITY;
    for axis in 0..3 {
        let depth = h - rel[axis].abs();
        if depth < best_depth {
            best_depth = depth;
            best_axis = axis;
        }
    }
    let mut force = Vector3::zeros();
    let sign = if rel[best_axis] >= 0.0 { 1.0 } else { -1.0 };
    force[best_axis] = sign * scene.wall_stiffness * best_depth;
    force
}

/// `F / force_per_mm`, shortened to at most `radius_mm`.
pub fn force_to_displacement(force: &Vector3<f64>, force_per_mm: f64, radius_mm: f64) -> Vector3<f64> {
    let offset = force / force_per_mm;
    let n = offset.norm();
    if n > radius_mm {
        offset * (radius_mm / n)
    } else {
        offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionState {
    pub tick: u64,
    pub cursor: Vector3<f64>,
    pub contact_force: Vector3<f64>,
    pub commanded_tip_offset: Vector3<f64>,
    pub plant: PlantState,
    pub saturated: bool,
}

/// One interactive session: a controller and a plant advanced together.
#[derive(Debug, Clone)]
pub struct Session {
    cfg: TeleopConfig,
    scene: VirtualScene,
    controller: ResolvedRateController,
    plant_cfg: PlantConfig,
    model: DeviceModel,
    seed: u64,
    plant: Plant,
    state: SessionState,
    /// Session tick at which the current plant started.
    tick_offset: u64,
}

impl Session {
    pub fn new(
        cfg: TeleopConfig,
        controller_cfg: ControllerConfig,
        plant_cfg: PlantConfig,
        model: DeviceModel,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let controller_cfg = ControllerConfig {
            target_tolerance: cfg.target_tolerance_mm,
            ..controller_cfg
        };
        controller_cfg.validate()?;
        let plant = Plant::new(plant_cfg, model, seed)?;
        let state = SessionState {
            tick: 0,
            cursor: Vector3::from(cfg.scene.cube_center) + Vector3::new(0.0, 0.0, 2.0 * cfg.scene.cube_half_extent),
            contact_force: Vector3::zeros(),
            commanded_tip_offset: Vector3::zeros(),
            plant: *plant.state(),
            saturated: false,
        };
        Ok(Self {
            cfg,
            scene: cfg.scene,
            controller: ResolvedRateController::new(controller_cfg, model),
            plant_cfg,
            model,
            seed,
            plant,
            state,
            tick_offset: 0,
        })
    }

    pub fn from_config(config: &Config, seed: u64) -> Result<Self> {
        Self::new(
            config.teleop,
            config.controller,
            config.plant,
            config.device_model()?,
            seed,
        )
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn scene(&self) -> &VirtualScene {
        &self.scene
    }

    pub fn set_scene(&mut self, scene: VirtualScene) -> Result<()> {
        scene.validate()?;
        self.scene = scene;
        Ok(())
    }

    /// Back to the preload configuration with a fresh plant. The scene and
    /// the tick counter are kept so that a client's frame stream stays
    /// strictly increasing.
    pub fn reset(&mut self) -> Result<()> {
        let (scene, tick) = (self.scene, self.state.tick);
        *self = Self::new(
            self.cfg,
            self.controller.cfg,
            self.plant_cfg,
            self.model,
            self.seed,
        )?;
        self.scene = scene;
        self.state.tick = tick;
        self.tick_offset = tick;
        Ok(())
    }

    pub fn tick_period(&self) -> f64 {
        1.0 / self.cfg.session_rate_hz
    }

    /// Contact force, commanded offset, one controller step, then plant
    /// ticks up to the end of this session tick.
    pub fn tick(&mut self, cursor: Vector3<f64>) -> Result<&SessionState> {
        if cursor.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cursor"));
        }
        let force = contact_force(&cursor, &self.scene);
        let offset = force_to_displacement(&force, self.cfg.force_per_mm, self.cfg.workspace_radius_mm);
        let target = self.model.preload_tip() + offset;
        let step = self.controller.step(&target)?;
        let tick = self.state.tick + 1;
        let end = (tick - self.tick_offset) as f64 * self.tick_period();
        let dt = self.plant_cfg.tick_dt;
        while self.plant.state().time + 0.5 * dt < end {
            self.plant.step(&step.commanded_pressures)?;
        }
        self.state = SessionState {
            tick,
            cursor,
            contact_force: force,
            commanded_tip_offset: offset,
            plant: *self.plant.state(),
            saturated: step.saturated,
        };
        Ok(&self.state)
    }

    pub fn frame(&self) -> StateFrame {
        StateFrame::from(&self.state)
    }
}

/// Arc parameters as sent on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcFrame {
    pub kappa: f64,
    pub phi: f64,
    pub theta: f64,
    #[serde(rename = "L")]
    pub backbone_length: f64,
}

impl From<&ArcParams> for ArcFrame {
    fn from(a: &ArcParams) -> Self {
        Self {
            kappa: a.kappa,
            phi: a.phi,
            theta: a.theta,
            backbone_length: a.backbone_length,
        }
    }
}

/// Server to client frame, one per session tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub tick: u64,
    pub cursor: [f64; 3],
    pub force_n: [f64; 3],
    pub tip_mm: [f64; 3],
    pub arc: ArcFrame,
    pub pressures_kpa: [f64; 3],
    pub saturated: bool,
}

impl From<&SessionState> for StateFrame {
    fn from(s: &SessionState) -> Self {
        Self {
            tick: s.tick,
            cursor: s.cursor.into(),
            force_n: s.contact_force.into(),
            tip_mm: s.plant.measured_tip.into(),
            arc: ArcFrame::from(&s.plant.arc),
            pressures_kpa: s.plant.actual_pressures,
            saturated: s.saturated,
        }
    }
}

impl StateFrame {
    pub fn is_finite(&self) -> bool {
        self.cursor
            .iter()
            .chain(&self.force_n)
            .chain(&self.tip_mm)
            .chain(&self.pressures_kpa)
            .chain(&[self.arc.kappa, self.arc.phi, self.arc.theta, self.arc.backbone_length])
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    State(StateFrame),
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Cursor { pos: [f64; 3] },
    Reset,
    Config { scene: VirtualScene },
}

impl ServerMessage {
    /// One JSON object, no trailing newline.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl ClientMessage {
    pub fn parse(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line.trim())?)
    }
}

/// Scripted cursor sample from a `t_s,x,y,z` file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorSample {
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CursorSample {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

pub fn read_cursor_csv<R: std::io::Read>(input: R) -> Result<Vec<CursorSample>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out: Vec<CursorSample> = Vec::new();
    for row in reader.deserialize() {
        let s: CursorSample = row?;
        if ![s.t_s, s.x, s.y, s.z].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cursor sample"));
        }
        if out.last().is_some_and(|p| s.t_s < p.t_s) {
            return Err(Error::InvalidInput("cursor samples must be sorted by t_s".into()));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn read_cursor_file(path: &Path) -> Result<Vec<CursorSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cursor_csv(file)
}

pub fn write_cursor_csv<W: Write>(out: W, samples: &[CursorSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Drives a session through a scripted cursor trajectory, holding each sample
/// until the next one, and returns every frame in tick order.
pub fn replay(session: &mut Session, samples: &[CursorSample]) -> Result<Vec<StateFrame>> {
    let Some(last) = samples.last() else {
        return Ok(Vec::new());
    };
    let period = session.tick_period();
    let n_ticks = (last.t_s / period).ceil() as u64;
    let mut frames = Vec::with_capacity(n_ticks as usize);
    let mut idx = 0;
    for k in 1..=n_ticks {
        let t = k as f64 * period;
        while idx + 1 < samples.len() && samples[idx + 1].t_s <= t + 1e-12 {
            idx += 1;
        }
        session.tick(samples[idx].position())?;
        frames.push(session.frame());
    }
    Ok(frames)
}

/// Writes frames as line-delimited JSON state messages.
pub fn write_frames<W: Write>(mut out: W, frames: &[StateFrame]) -> Result<()> {
    for f in frames {
        let line = ServerMessage::State(*f).to_json()?;
        writeln!(out, "{line}").map_err(|e| Error::io("<frames>", e))?;
    }
    Ok(())
}

/// Reads line-delimited state messages back.
pub fn read_frames<R: BufRead>(input: R) -> Result<Vec<StateFrame>> {
    let mut frames = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<frames>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        if let ServerMessage::State(f) = serde_json::from_str(&line)? {
            frames.push(f);
        }
    }
    Ok(frames)
}
