//! Controller driving a simulated plant, sampled like the external tracker.

use nalgebra::Vector3;

use crate::control::{ControllerConfig, ResolvedRateController};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::plant::{Plant, PlantConfig, PlantState};

const TIME_EPS: f64 = 1e-9;

pub(crate) struct Rig {
    pub plant: Plant,
    controller: ResolvedRateController,
    control_period: f64,
    next_control: f64,
    command: [f64; 3],
    pub saturated: bool,
    pub nonconverged_steps: usize,
}

impl Rig {
    pub fn new(
        model: DeviceModel,
        ctrl: ControllerConfig,
        plant_cfg: PlantConfig,
        seed: u64,
    ) -> Result<Self> {
        let plant = Plant::new(plant_cfg, model, seed)?;
        let command = plant.state().commanded_pressures;
        Ok(Self {
            plant,
            controller: ResolvedRateController::new(ctrl, model),
            control_period: 1.0 / ctrl.tick_rate_hz,
            next_control: 0.0,
            command,
            saturated: false,
            nonconverged_steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.plant.state().time
    }

    /// Updates the controller when due, then advances the plant one tick.
    /// With `freeze_on_saturation` the command is held once any chamber has
    /// hit its pressure limit.
    pub fn tick(&mut self, target: &Vector3<f64>, freeze_on_saturation: bool) -> Result<&PlantState> {
        if self.time() + TIME_EPS >= self.next_control {
            self.next_control += self.control_period;
            if !(freeze_on_saturation && self.saturated) {
                let last = match self.controller.solve(target) {
                    Ok(traj) => traj.last().copied(),
                    Err(Error::NonConvergence { trajectory }) => {
                        self.nonconverged_steps += 1;
                        trajectory.last().copied()
                    }
                    Err(e) => return Err(e),
                };
                if let Some(last) = last {
                    self.command = last.commanded_pressures;
                    self.saturated |= last.saturated;
                }
            }
        }
        self.plant.step(&self.command)
    }
}

/// Emits sample instants at a fixed rate against the plant clock.
pub(crate) struct Sampler {
    period: f64,
    next: f64,
}

impl Sampler {
    pub fn new(rate_hz: f64, start: f64) -> Self {
        Self {
            period: 1.0 / rate_hz,
            next: start,
        }
    }

    /// True when a sample is due at time `t`.
    pub fn due(&mut self, t: f64) -> bool {
        if t + TIME_EPS >= self.next {
            while self.next <= t + TIME_EPS {
                self.next += self.period;
            }
            true
        } else {
            false
        }
    }
}
