//! Single-segment constant-curvature kinematics for the three-chamber device.
//!
//! Chamber lengths map to arc parameters (curvature, bending-plane angle,
//! sector angle, backbone length) and from there to the end-cap pose. The
//! device frame has its origin at the base, z along the main axis.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this sector angle the straight-segment limit of the tip position is used.
pub const STRAIGHT_THETA_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceGeometry {
    /// Distance from the central axis to each chamber centroid (mm).
    pub chamber_offset_d: f64,
    /// Chamber length at the preload configuration (mm).
    pub initial_length: f64,
    /// Lower pressure limit (kPa).
    pub pressure_min: f64,
    /// Upper pressure (safety) limit (kPa).
    pub pressure_max: f64,
    /// Length perturbation used to keep the curvature non-zero when straight (mm).
    pub singularity_offset: f64,
}

impl DeviceGeometry {
    /// Centroid distance of a 120 degree circular sector of radius `radius`.
    pub fn sector_centroid(radius: f64) -> f64 {
        2.0 * radius * (PI / 3.0).sin() / PI
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.chamber_offset_d,
            self.initial_length,
            self.pressure_min,
            self.pressure_max,
            self.singularity_offset,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("device geometry"));
        }
        if self.chamber_offset_d <= 0.0 {
            return Err(Error::Config("chamber_offset_d must be > 0".into()));
        }
        if self.initial_length <= 0.0 {
            return Err(Error::Config("initial_length must be > 0".into()));
        }
        if self.pressure_min >= self.pressure_max {
            return Err(Error::Config("pressure_min must be < pressure_max".into()));
        }
        if !(self.singularity_offset > 0.0 && self.singularity_offset < 0.01) {
            return Err(Error::Config(
                "singularity_offset must lie in (0, 0.01) mm".into(),
            ));
        }
        Ok(())
    }

    /// Chamber lengths at the preload configuration.
    pub fn preload_lengths(&self) -> ChamberLengths {
        ChamberLengths([self.initial_length; 3])
    }
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            // 120 degree sectors of a 12 mm circle.
            chamber_offset_d: Self::sector_centroid(12.0),
            initial_length: 22.1,
            pressure_min: 0.0,
            pressure_max: 50.0,
            singularity_offset: 1e-4,
        }
    }
}

/// Lengths of the three chambers (mm); the joint-space vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ChamberLengths([f64; 3]);

impl ChamberLengths {
    pub fn new(lengths: [f64; 3]) -> Result<Self> {
        if lengths.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("chamber length"));
        }
        if let Some(l) = lengths.iter().find(|l| **l <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "chamber lengths must be positive, got {l}"
            )));
        }
        Ok(Self(lengths))
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        Self::new([v.x, v.y, v.z])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::from(self.0)
    }

    pub fn get(&self, chamber: usize) -> f64 {
        self.0[chamber]
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / 3.0
    }

    pub fn spread(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::MIN, f64::max);
        let min = self.0.iter().copied().fold(f64::MAX, f64::min);
        max - min
    }
}

impl TryFrom<[f64; 3]> for ChamberLengths {
    type Error = Error;

    fn try_from(value: [f64; 3]) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ChamberLengths> for [f64; 3] {
    fn from(value: ChamberLengths) -> Self {
        value.0
    }
}

/// Configuration-space description of the bent segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcParams {
    /// Curvature (1/mm).
    pub kappa: f64,
    /// Bending-plane angle about z, in (-pi, pi].
    pub phi: f64,
    /// Sector angle subtended by the arc (rad).
    pub theta: f64,
    /// Backbone arc length (mm).
    #[serde(rename = "L")]
    pub backbone_length: f64,
    /// Set when the lengths were equal and the bending terms were evaluated
    /// on the offset-perturbed triple.
    #[serde(skip)]
    pub regularized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipPose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
    /// Control point at the center of the end cap (mm).
    pub control_point_u: Vector3<f64>,
}

fn bending_radicand(l: [f64; 3]) -> f64 {
    // sqrt(l1^2 + l2^2 + l3^2 - l1 l2 - l1 l3 - l2 l3), written as a sum of
    // squared differences so that nearly straight triples keep precision.
    let [l1, l2, l3] = l;
    (((l1 - l2).powi(2) + (l2 - l3).powi(2) + (l3 - l1).powi(2)) / 2.0).sqrt()
}

fn wrap_angle(phi: f64) -> f64 {
    if phi <= -PI {
        phi + 2.0 * PI
    } else if phi > PI {
        phi - 2.0 * PI
    } else {
        phi
    }
}

/// Arc parameters from chamber lengths.
///
/// When the chambers are equal to within `singularity_offset`, the first
/// chamber is lengthened by the offset before evaluating the bending terms so
/// that the curvature stays strictly positive. The backbone length is always
/// the plain mean of the given lengths.
pub fn arc_params(lengths: &ChamberLengths, geom: &DeviceGeometry) -> ArcParams {
    let mut l = lengths.as_array();
    let regularized = lengths.spread() < geom.singularity_offset;
    if regularized {
        l[0] += geom.singularity_offset;
    }
    let [l1, l2, l3] = l;
    let d = geom.chamber_offset_d;
    let backbone_length = lengths.mean();
    let theta = 2.0 * bending_radicand(l) / (3.0 * d);
    let kappa = theta / backbone_length;
    let phi = wrap_angle(f64::atan2(
        3f64.sqrt() * (l2 + l3 - 2.0 * l1),
        3.0 * (l2 - l3),
    ));
    ArcParams {
        kappa,
        phi,
        theta,
        backbone_length,
        regularized,
    }
}

/// End-cap pose of the arc: `Rz(phi)` composed with `Ry(theta)` and the
/// in-plane tip offset `[r(1 - cos theta), 0, r sin theta]`, `r = 1/kappa`.
pub fn tip_pose(arc: &ArcParams) -> TipPose {
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), arc.phi);
    let straight = arc.regularized || arc.theta < STRAIGHT_THETA_LIMIT;
    let (ry, in_plane) = if straight {
        (
            Rotation3::identity(),
            Vector3::new(0.0, 0.0, arc.backbone_length),
        )
    } else {
        let r = 1.0 / arc.kappa;
        let half = 0.5 * arc.theta;
        (
            Rotation3::from_axis_angle(&Vector3::y_axis(), arc.theta),
            // 1 - cos(theta) = 2 sin^2(theta / 2)
            Vector3::new(r * 2.0 * half.sin().powi(2), 0.0, r * arc.theta.sin()),
        )
    };
    let rotation = (rz * ry).into_inner();
    let position = rz * in_plane;
    TipPose {
        rotation,
        position,
        control_point_u: position,
    }
}

/// Control point for a set of chamber lengths.
pub fn control_point(lengths: &ChamberLengths, geom: &DeviceGeometry) -> Vector3<f64> {
    tip_pose(&arc_params(lengths, geom)).control_point_u
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom_662() -> DeviceGeometry {
        DeviceGeometry {
            chamber_offset_d: 6.62,
            ..DeviceGeometry::default()
        }
    }

    #[test]
    fn default_offset_is_sector_centroid() {
        assert_relative_eq!(
            DeviceGeometry::default().chamber_offset_d,
            6.615946745061505,
            epsilon = 1e-12
        );
    }

    #[test]
    fn straight_triple_is_regularized() {
        let arc = arc_params(&ChamberLengths([23.0; 3]), &geom_662());
        assert!(arc.regularized);
        assert!(arc.kappa > 0.0);
        assert!(arc.theta < 1e-4);
        assert_eq!(arc.backbone_length, 23.0);
        assert_relative_eq!(arc.theta / arc.kappa, 23.0, max_relative = 1e-12);
    }

    #[test]
    fn bent_triple_matches_direct_evaluation() {
        // Radicand of (24, 22, 22) is exactly 2.
        let arc = arc_params(&ChamberLengths([24.0, 22.0, 22.0]), &geom_662());
        assert!(!arc.regularized);
        assert_relative_eq!(arc.kappa, 4.0 / (6.62 * 68.0), max_relative = 1e-12);
        assert_relative_eq!(arc.kappa, 8.886e-3, max_relative = 1e-3);
        assert_relative_eq!(arc.theta, 4.0 / (3.0 * 6.62), max_relative = 1e-12);
        assert_relative_eq!(arc.theta, 0.2014, max_relative = 1e-3);
        assert_relative_eq!(arc.backbone_length, 68.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(arc.phi, -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_covers_all_quadrants() {
        let g = geom_662();
        // Lengthening one chamber bends away from it.
        let phis: Vec<f64> = [[24.0, 22.0, 22.0], [22.0, 24.0, 22.0], [22.0, 22.0, 24.0]]
            .iter()
            .map(|l| arc_params(&ChamberLengths(*l), &g).phi)
            .collect();
        assert_relative_eq!(phis[0], -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(phis[1], PI / 6.0, epsilon = 1e-12);
        assert_relative_eq!(phis[2], 5.0 * PI / 6.0, epsilon = 1e-12);
        // Shortening chamber 1 bends toward it, phi = +pi/2.
        let arc = arc_params(&ChamberLengths([20.0, 22.0, 22.0]), &g);
        assert_relative_eq!(arc.phi, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn straight_tip_is_on_axis() {
        let pose = tip_pose(&arc_params(&ChamberLengths([23.0; 3]), &geom_662()));
        let u = pose.control_point_u;
        assert!(u.x.abs() < 1e-6 && u.y.abs() < 1e-6);
        assert!((u.z - 23.0).abs() < 1e-6);
    }

    #[test]
    fn bent_tip_matches_closed_form() {
        let arc = arc_params(&ChamberLengths([24.0, 22.0, 22.0]), &geom_662());
        let u = tip_pose(&arc).control_point_u;
        // Closed-form control point, evaluated independently of the transform chain.
        let ex = arc.phi.cos() * (1.0 - arc.theta.cos()) / arc.kappa;
        let ey = arc.phi.sin() * (1.0 - arc.theta.cos()) / arc.kappa;
        let ez = arc.theta.sin() / arc.kappa;
        assert_relative_eq!(u, Vector3::new(ex, ey, ez), epsilon = 1e-12);
        // Independent double-precision evaluation: (0, -2.274939, 22.513728).
        assert!(u.x.abs() < 1e-12);
        assert_relative_eq!(u.y, -2.274_939_139_8, epsilon = 1e-9);
        assert_relative_eq!(u.z, 22.513_728_112_1, epsilon = 1e-9);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let arc = arc_params(&ChamberLengths([27.0, 17.0, 21.0]), &geom_662());
        let r = tip_pose(&arc).rotation;
        assert_relative_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lengths_reject_bad_values() {
        assert!(ChamberLengths::new([1.0, f64::NAN, 1.0]).is_err());
        assert!(ChamberLengths::new([1.0, 0.0, 1.0]).is_err());
        assert!(ChamberLengths::new([1.0, -2.0, 1.0]).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(DeviceGeometry::default().validate().is_ok());
        let bad = DeviceGeometry {
            singularity_offset: 0.02,
            ..DeviceGeometry::default()
        };
        assert!(bad.validate().is_err());
        let bad = DeviceGeometry {
            pressure_min: 60.0,
            ..DeviceGeometry::default()
        };
        assert!(bad.validate().is_err());
    }
}
