use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height of the small circles above/below the preload plane (mm).
pub const SMALL_CIRCLE_HEIGHT: f64 = 2.5;
pub const SMALL_CIRCLE_RADIUS: f64 = 3.0;
pub const MIDDLE_CIRCLE_RADIUS: f64 = 5.0;
/// Length of the single axial targets (mm), the experiment sphere radius.
pub const AXIAL_TARGET_DISTANCE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Lower,
    Middle,
    Upper,
    ZPlus,
    ZMinus,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::Lower,
        Level::Middle,
        Level::Upper,
        Level::ZPlus,
        Level::ZMinus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Level::Lower => "lower",
            Level::Middle => "middle",
            Level::Upper => "upper",
            Level::ZPlus => "z_plus",
            Level::ZMinus => "z_minus",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Level::Lower),
            "middle" => Ok(Level::Middle),
            "upper" => Ok(Level::Upper),
            "z_plus" | "z-plus" | "z+" | "zplus" => Ok(Level::ZPlus),
            "z_minus" | "z-minus" | "z-" | "zminus" => Ok(Level::ZMinus),
            _ => Err(Error::InvalidInput(format!("unknown level {s:?}"))),
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Commanded target offsets (mm) relative to the preload tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTargetSet {
    pub level: Level,
    pub targets: Vec<[f64; 3]>,
    /// Azimuth of each target in degrees; empty for the axial levels.
    pub angles: Vec<f64>,
}

impl PathTargetSet {
    pub fn label(&self, index: usize) -> String {
        match self.level {
            Level::ZPlus => "Z+".to_string(),
            Level::ZMinus => "Z-".to_string(),
            _ => format!("{}", self.angles[index]),
        }
    }

    pub fn angle(&self, index: usize) -> Option<f64> {
        self.angles.get(index).copied()
    }
}

/// Point on a horizontal circle of the given radius and height.
pub fn circle_target(radius: f64, height: f64, angle_deg: f64) -> Vector3<f64> {
    let a = angle_deg.to_radians();
    Vector3::new(radius * a.cos(), radius * a.sin(), height)
}

/// Middle level: 12 targets every 30 degrees on a 5 mm circle in the preload
/// plane. Lower/upper: 6 targets every 60 degrees on 3 mm circles 2.5 mm
/// below/above it, at the 30, 90, ..., 330 degree azimuths of the reference
/// dataset. Axial levels: one target along +z or -z.
pub fn generate_targets(level: Level) -> PathTargetSet {
    let circle = |radius: f64, height: f64, angles: Vec<f64>| PathTargetSet {
        level,
        targets: angles
            .iter()
            .map(|&a| circle_target(radius, height, a).into())
            .collect(),
        angles,
    };
    match level {
        Level::Middle => circle(
            MIDDLE_CIRCLE_RADIUS,
            0.0,
            (0..12).map(|i| 30.0 * i as f64).collect(),
        ),
        Level::Lower => circle(
            SMALL_CIRCLE_RADIUS,
            -SMALL_CIRCLE_HEIGHT,
            (0..6).map(|i| 30.0 + 60.0 * i as f64).collect(),
        ),
        Level::Upper => circle(
            SMALL_CIRCLE_RADIUS,
            SMALL_CIRCLE_HEIGHT,
            (0..6).map(|i| 30.0 + 60.0 * i as f64).collect(),
        ),
        Level::ZPlus => PathTargetSet {
            level,
            targets: vec![[0.0, 0.0, AXIAL_TARGET_DISTANCE]],
            angles: Vec::new(),
        },
        Level::ZMinus => PathTargetSet {
            level,
            targets: vec![[0.0, 0.0, -AXIAL_TARGET_DISTANCE]],
            angles: Vec::new(),
        },
    }
}
