//! TOML configuration shared by every subcommand.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actuator::PressureLengthMap;
use crate::control::ControllerConfig;
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::kinematics::DeviceGeometry;
use crate::plant::PlantConfig;
use crate::teleop::TeleopConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorSection {
    pub slope: f64,
    pub intercept: f64,
    pub valid_pressure_range: [f64; 2],
    /// Optional independent maps, one per chamber; overrides the shared line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_chamber: Option<[PressureLengthMap; 3]>,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        Self::shared(PressureLengthMap::default())
    }
}

impl ActuatorSection {
    pub fn shared(map: PressureLengthMap) -> Self {
        Self {
            slope: map.slope,
            intercept: map.intercept,
            valid_pressure_range: map.valid_pressure_range,
            per_chamber: None,
        }
    }

    pub fn maps(&self) -> [PressureLengthMap; 3] {
        self.per_chamber.unwrap_or(
            [PressureLengthMap {
                slope: self.slope,
                intercept: self.intercept,
                valid_pressure_range: self.valid_pressure_range,
            }; 3],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub geometry: DeviceGeometry,
    #[serde(default)]
    pub actuator: ActuatorSection,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub teleop: TeleopConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.device_model()?;
        self.controller.validate()?;
        self.plant.validate()?;
        self.experiment.validate()?;
        self.teleop.validate()?;
        Ok(())
    }

    pub fn device_model(&self) -> Result<DeviceModel> {
        DeviceModel::new(self.geometry, self.actuator.maps())
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        let text = self.to_toml_string().unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
