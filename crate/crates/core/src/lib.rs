//! Simulation library for a handheld three-chamber soft pneumatic haptic
//! device modelled as a single constant-curvature segment.
//!
//! - [`kinematics`]: chamber lengths to arc parameters to tip pose.
//! - [`actuator`]: per-chamber pressure-length maps and their calibration.
//! - [`control`]: backward-difference Jacobian and resolved-rate control.
//! - [`plant`]: regulator lag, free and blocked device simulation.
//! - [`experiments`]: path, force and bandwidth campaign plus reports.
//! - [`teleop`]: virtual-cube session loop and its wire messages.
//!
//! Units are mm, rad, kPa, N and s throughout.

pub mod actuator;
pub mod config;
pub mod control;
pub mod device;
pub mod error;
pub mod experiments;
pub mod kinematics;
pub mod plant;
pub mod teleop;
pub mod workspace;

pub use config::Config;
pub use device::DeviceModel;
pub use error::{Error, Result};
