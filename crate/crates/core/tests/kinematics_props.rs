use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;

use softhaptic_core::kinematics::{arc_params, control_point, tip_pose, ChamberLengths, DeviceGeometry};
use softhaptic_core::DeviceModel;

fn length() -> impl Strategy<Value = f64> {
    16.35..27.85f64
}

fn bent() -> impl Strategy<Value = [f64; 3]> {
    [length(), length(), length()].prop_filter("clearly bent", |l| {
        let s = (l[0] - l[1]).abs() + (l[1] - l[2]).abs() + (l[2] - l[0]).abs();
        s > 1e-2
    })
}

fn geom() -> DeviceGeometry {
    DeviceGeometry::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn backbone_identity(l in bent()) {
        let arc = arc_params(&ChamberLengths::new(l).unwrap(), &geom());
        prop_assert!(((arc.theta / arc.kappa) - arc.backbone_length).abs() <= 1e-9 * arc.backbone_length);
        prop_assert!(arc.phi > -PI && arc.phi <= PI);
    }

    #[test]
    fn chord_law(l in bent()) {
        let arc = arc_params(&ChamberLengths::new(l).unwrap(), &geom());
        let u = tip_pose(&arc).control_point_u;
        let chord = 2.0 / arc.kappa * (arc.theta / 2.0).sin();
        prop_assert!((u.norm() - chord).abs() <= 1e-9 * chord);
    }

    #[test]
    fn cyclic_shift_rotates_by_120_degrees(l in bent()) {
        let g = geom();
        let u = control_point(&ChamberLengths::new(l).unwrap(), &g);
        let shifted = control_point(&ChamberLengths::new([l[1], l[2], l[0]]).unwrap(), &g);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), -2.0 * PI / 3.0);
        prop_assert!((shifted - rot * u).norm() <= 1e-9 * u.norm());
    }

    #[test]
    fn common_extension_keeps_bend(l in bent(), shift in -2.0..2.0f64) {
        // Adding the same length to every chamber changes only L.
        let g = geom();
        let a = arc_params(&ChamberLengths::new(l).unwrap(), &g);
        let b = arc_params(&ChamberLengths::new(l.map(|x| x + shift)).unwrap(), &g);
        prop_assert!((a.theta - b.theta).abs() <= 1e-12);
        prop_assert!((a.phi - b.phi).abs() <= 1e-12);
        prop_assert!((b.backbone_length - a.backbone_length - shift).abs() <= 1e-12);
    }

    #[test]
    fn rotation_is_proper(l in bent()) {
        let r = tip_pose(&arc_params(&ChamberLengths::new(l).unwrap(), &geom())).rotation;
        prop_assert!((r.transpose() * r - Matrix3::identity()).abs().max() <= 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn tip_axis_is_arc_tangent(l in bent()) {
        // The end-cap z axis is tangent to the arc: it makes angle theta with
        // the base z axis and lies in the bending plane.
        let arc = arc_params(&ChamberLengths::new(l).unwrap(), &geom());
        let pose = tip_pose(&arc);
        let z_tip = pose.rotation.column(2).into_owned();
        prop_assert!((z_tip.z - arc.theta.cos()).abs() <= 1e-12);
        let plane_normal = Vector3::new(-arc.phi.sin(), arc.phi.cos(), 0.0);
        prop_assert!(z_tip.dot(&plane_normal).abs() <= 1e-12);
        prop_assert!(pose.control_point_u.dot(&plane_normal).abs() <= 1e-9);
    }

    #[test]
    fn equal_lengths_give_straight_tip(l in length()) {
        let arc = arc_params(&ChamberLengths::new([l; 3]).unwrap(), &geom());
        prop_assert!(arc.kappa > 0.0);
        let u = tip_pose(&arc).control_point_u;
        prop_assert!(u.x.abs() < 1e-6 && u.y.abs() < 1e-6);
        prop_assert!((u.z - l).abs() < 1e-6);
        prop_assert!((arc.backbone_length - l).abs() <= 1e-12);
    }

    #[test]
    fn control_point_is_continuous_near_straight(l in length(), eps in 1e-6..1e-3f64) {
        let g = geom();
        let straight = control_point(&ChamberLengths::new([l; 3]).unwrap(), &g);
        let nearly = control_point(&ChamberLengths::new([l + eps, l, l]).unwrap(), &g);
        // The tip moves on the order of the perturbation itself.
        prop_assert!((straight - nearly).norm() < 2.0 * eps + 1e-6);
    }
}

#[test]
fn published_linear_fit_anchor() {
    let model = DeviceModel::default();
    let pose = model.forward_kinematics(&[25.0; 3]).unwrap();
    assert_relative_eq!(pose.control_point_u, Vector3::new(0.0, 0.0, 22.1), epsilon = 1e-9);
    let top = model.forward_kinematics(&[50.0; 3]).unwrap();
    assert_relative_eq!(top.control_point_u.z, 27.85, epsilon = 1e-9);
    let bottom = model.forward_kinematics(&[0.0; 3]).unwrap();
    assert_relative_eq!(bottom.control_point_u.z, 16.35, epsilon = 1e-9);
}

#[test]
fn pressure_out_of_range_names_chamber() {
    let err = DeviceModel::default().forward_kinematics(&[25.0, 60.0, 25.0]).unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
}
