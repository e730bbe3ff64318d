use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::actuator::PressureLengthMap;
use crate::error::{Error, Result};
use crate::kinematics::{arc_params, tip_pose, ArcParams, ChamberLengths, DeviceGeometry, TipPose};

/// Geometry plus one pressure-length map per chamber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub geometry: DeviceGeometry,
    pub actuators: [PressureLengthMap; 3],
}

impl Default for DeviceModel {
    fn default() -> Self {
        Self::shared(DeviceGeometry::default(), PressureLengthMap::default())
    }
}

impl DeviceModel {
    pub fn new(geometry: DeviceGeometry, actuators: [PressureLengthMap; 3]) -> Result<Self> {
        geometry.validate()?;
        for map in &actuators {
            map.validate()?;
        }
        let model = Self {
            geometry,
            actuators,
        };
        for (i, map) in actuators.iter().enumerate() {
            let p = map.unclamped_pressure(geometry.initial_length);
            if p < geometry.pressure_min || p > geometry.pressure_max {
                return Err(Error::Config(format!(
                    "initial_length {} mm needs {p:.3} kPa in chamber {}, outside the pressure limits",
                    geometry.initial_length,
                    i + 1
                )));
            }
        }
        Ok(model)
    }

    /// All three chambers share one map.
    pub fn shared(geometry: DeviceGeometry, map: PressureLengthMap) -> Self {
        Self {
            geometry,
            actuators: [map; 3],
        }
    }

    pub fn pressure_limits(&self) -> [f64; 2] {
        [self.geometry.pressure_min, self.geometry.pressure_max]
    }

    fn check_pressures(&self, pressures: &[f64; 3]) -> Result<()> {
        for (i, &p) in pressures.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite("pressure"));
            }
            let [lo, hi] = self.actuators[i].valid_pressure_range;
            let min = lo.max(self.geometry.pressure_min);
            let max = hi.min(self.geometry.pressure_max);
            if p < min || p > max {
                return Err(Error::PressureOutOfRange {
                    chamber: i + 1,
                    pressure: p,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    pub fn lengths_from_pressures(&self, pressures: &[f64; 3]) -> Result<ChamberLengths> {
        self.check_pressures(pressures)?;
        let mut l = [0.0; 3];
        for i in 0..3 {
            l[i] = self.actuators[i].length_from_pressure(pressures[i])?;
        }
        ChamberLengths::new(l)
    }

    /// Pressures for the given lengths, without limit checks.
    pub fn pressures_for_lengths(&self, lengths: &ChamberLengths) -> [f64; 3] {
        let l = lengths.as_array();
        [0, 1, 2].map(|i| self.actuators[i].unclamped_pressure(l[i]))
    }

    pub fn arc(&self, lengths: &ChamberLengths) -> ArcParams {
        arc_params(lengths, &self.geometry)
    }

    pub fn pose(&self, lengths: &ChamberLengths) -> TipPose {
        tip_pose(&self.arc(lengths))
    }

    pub fn control_point(&self, lengths: &ChamberLengths) -> Vector3<f64> {
        self.pose(lengths).control_point_u
    }

    /// Pressures to lengths to arc to pose.
    pub fn forward_kinematics(&self, pressures: &[f64; 3]) -> Result<TipPose> {
        Ok(self.pose(&self.lengths_from_pressures(pressures)?))
    }

    pub fn preload_lengths(&self) -> ChamberLengths {
        self.geometry.preload_lengths()
    }

    pub fn preload_pressures(&self) -> [f64; 3] {
        self.pressures_for_lengths(&self.preload_lengths())
    }

    pub fn preload_tip(&self) -> Vector3<f64> {
        self.control_point(&self.preload_lengths())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn preload_matches_fit() {
        let m = DeviceModel::default();
        assert_relative_eq!(m.preload_pressures()[0], 25.0, epsilon = 1e-9);
        let u = m.forward_kinematics(&[25.0; 3]).unwrap().control_point_u;
        assert_relative_eq!(u, Vector3::new(0.0, 0.0, 22.1), epsilon = 1e-9);
        assert_relative_eq!(m.preload_tip(), u, epsilon = 1e-12);
    }

    #[test]
    fn zero_pressure_is_intercept() {
        let u = DeviceModel::default()
            .forward_kinematics(&[0.0; 3])
            .unwrap()
            .control_point_u;
        assert_relative_eq!(u, Vector3::new(0.0, 0.0, 16.35), epsilon = 1e-9);
    }

    #[test]
    fn pressurizing_chamber_one_bends_away() {
        let m = DeviceModel::default();
        let u = m.forward_kinematics(&[50.0, 25.0, 25.0]).unwrap().control_point_u;
        assert!(u.x.abs() < 1e-9);
        assert!(u.y < -1.0, "{u}");
        // Same result through the explicit chain.
        let l = m.lengths_from_pressures(&[50.0, 25.0, 25.0]).unwrap();
        let chain = tip_pose(&arc_params(&l, &m.geometry)).control_point_u;
        assert_relative_eq!(u, chain, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_pressure_names_chamber() {
        match DeviceModel::default().forward_kinematics(&[25.0, 51.0, 25.0]) {
            Err(Error::PressureOutOfRange { chamber, .. }) => assert_eq!(chamber, 2),
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(DeviceModel::default()
            .forward_kinematics(&[-1.0, 25.0, 25.0])
            .is_err());
    }

    #[test]
    fn unreachable_preload_rejected() {
        let geometry = DeviceGeometry {
            initial_length: 40.0,
            ..DeviceGeometry::default()
        };
        assert!(DeviceModel::new(geometry, [PressureLengthMap::default(); 3]).is_err());
    }
}
