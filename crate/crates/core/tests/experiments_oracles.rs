use std::f64::consts::{FRAC_1_SQRT_2, PI};

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, Rotation3, Unit, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use softhaptic_core::experiments::{
    calibrate_block_stiffness, fit_sine, generate_targets, path_error, radial_range,
    run_bandwidth_experiment, run_frequency, Axis, Level,
};
use softhaptic_core::plant::{PlantConfig, PlantMode, DEFAULT_STIFFNESS_AXIAL, DEFAULT_STIFFNESS_LATERAL};
use softhaptic_core::Config;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    [-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64].prop_map(Vector3::from)
}

/// Distance from a point to a line through the cross-product formula.
fn oracle_distance(p: &Vector3<f64>, o: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
    (p - o).cross(d).norm() / d.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn path_error_matches_cross_product_oracle(
        pts in prop::collection::vec(vec3(), 2..40),
        o in vec3(),
        d in vec3(),
    ) {
        prop_assume!(d.norm() > 1e-3);
        let dir = d.normalize();
        let stats = path_error(&pts, &o, &dir).unwrap();
        let dists: Vec<f64> = pts.iter().map(|p| oracle_distance(p, &o, &d)).collect();
        let mean = dists.iter().sum::<f64>() / dists.len() as f64;
        let max = dists.iter().copied().fold(0.0, f64::max);
        prop_assert!((stats.mean - mean).abs() <= 1e-9 * (1.0 + mean));
        prop_assert!((stats.max - max).abs() <= 1e-9 * (1.0 + max));
        prop_assert_eq!(stats.n_samples, pts.len());
    }

    #[test]
    fn path_error_is_rotation_invariant(
        pts in prop::collection::vec(vec3(), 2..20),
        o in vec3(),
        d in vec3(),
        axis in vec3(),
        angle in -PI..PI,
    ) {
        prop_assume!(d.norm() > 1e-3 && axis.norm() > 1e-3);
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let dir = d.normalize();
        let a = path_error(&pts, &o, &dir).unwrap();
        let rotated: Vec<_> = pts.iter().map(|p| r * p).collect();
        let b = path_error(&rotated, &(r * o), &(r * dir).normalize()).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9);
        prop_assert!((a.std - b.std).abs() <= 1e-9);
        prop_assert!((a.max - b.max).abs() <= 1e-9);
    }

    #[test]
    fn radial_range_matches_brute_force(pts in prop::collection::vec(vec3(), 1..30), c in vec3()) {
        let expected = pts.iter().map(|p| ((p.x - c.x).powi(2) + (p.y - c.y).powi(2) + (p.z - c.z).powi(2)).sqrt()).fold(0.0, f64::max);
        prop_assert!((radial_range(&pts, &c).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn noiseless_sine_reconstructs_exactly(
        a in 0.2..5.0f64,
        f in 0.1..10.0f64,
        phi in -3.0..3.0f64,
        x0 in -30.0..30.0f64,
    ) {
        let n = ((3.0 / f).max(2.0) * 56.0) as usize;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / 56.0).collect();
        let x: Vec<f64> = t.iter().map(|&t| a * (2.0 * PI * f * t + phi).sin() + x0).collect();
        let fit = fit_sine(&t, &x, f).unwrap();
        prop_assert!(fit.residual_rms <= 1e-9, "residual {}", fit.residual_rms);
        prop_assert!((fit.amplitude_a - a).abs() <= 1e-8 * a);
    }
}

#[test]
fn path_error_rejects_non_unit_direction() {
    let pts = [Vector3::zeros(), Vector3::x()];
    assert!(path_error(&pts, &Vector3::zeros(), &Vector3::new(2.0, 0.0, 0.0)).is_err());
    assert!(path_error(&pts, &Vector3::zeros(), &Vector3::zeros()).is_err());
}

/// With noise the nonlinear fit must do at least as well as the linear
/// least-squares fit at the true frequency, solved by QR.
#[test]
fn noisy_fit_beats_fixed_frequency_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, 0.2).unwrap();
    for &(a, f, phi, x0) in &[(1.0, 0.5, 0.3, 2.0), (3.0, 2.5, -1.0, 22.1), (0.8, 7.0, 2.0, -1.0)] {
        let n = 300;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / 56.0).collect();
        let x: Vec<f64> = t
            .iter()
            .map(|&t| a * (2.0 * PI * f * t + phi).sin() + x0 + noise.sample(&mut rng))
            .collect();
        let design = DMatrix::from_fn(n, 3, |i, j| {
            let w = 2.0 * PI * f * t[i];
            [w.sin(), w.cos(), 1.0][j]
        });
        let rhs = DVector::from_vec(x.clone());
        let qr = design.clone().qr();
        let coef = qr.r().solve_upper_triangular(&(qr.q().transpose() * &rhs)).expect("full rank");
        let ls_sse = (design * &coef - &rhs).norm_squared();
        let ls_amp = coef[0].hypot(coef[1]);
        let fit = fit_sine(&t, &x, f).unwrap();
        let fit_sse = fit.residual_rms.powi(2) * n as f64;
        assert!(fit_sse <= ls_sse * (1.0 + 1e-9), "{fit_sse} > {ls_sse}");
        assert!((fit.amplitude_a - ls_amp).abs() < 0.05 * a, "{} vs {ls_amp}", fit.amplitude_a);
    }
}

#[test]
fn sine_monte_carlo_mean_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let a = 2.0;
    let noise = Normal::new(0.0, a * FRAC_1_SQRT_2 / 10.0).unwrap();
    let t: Vec<f64> = (0..500).map(|i| i as f64 / 56.0).collect();
    let mut sum = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = t.iter().map(|&t| a * (2.0 * PI * 1.5 * t).sin() + noise.sample(&mut rng)).collect();
        sum += fit_sine(&t, &x, 1.5).unwrap().amplitude_a;
    }
    assert_relative_eq!(sum / 100.0, a, max_relative = 2e-3);
}

#[test]
fn target_sets_are_reproducible() {
    for level in Level::ALL {
        let a = generate_targets(level);
        let b = generate_targets(level);
        assert_eq!(a.targets, b.targets);
    }
    assert_eq!(generate_targets(Level::Middle).targets.len(), 12);
    assert_eq!(generate_targets(Level::Upper).targets.len(), 6);
    let z = generate_targets(Level::ZMinus);
    assert_eq!(z.targets.len(), 1);
}

#[test]
fn default_stiffness_matches_calibration() {
    let cal = calibrate_block_stiffness(&Config::default()).unwrap();
    assert_relative_eq!(cal.stiffness_axial, DEFAULT_STIFFNESS_AXIAL, max_relative = 1e-4);
    assert_relative_eq!(cal.stiffness_lateral, DEFAULT_STIFFNESS_LATERAL, max_relative = 1e-4);
}

fn ideal_with_tau(tau: f64) -> Config {
    Config {
        plant: PlantConfig {
            regulator_time_constant_tau: tau,
            tick_dt: (tau / 4.0).min(0.01),
            ..PlantConfig::ideal()
        },
        ..Config::default()
    }
}

#[test]
fn slow_regulator_crossing() {
    // A pure first-order lag at tau = 0.5 s has its corner at 0.318 Hz; on
    // the 0.1 / 0.5 Hz grid the log-linear interpolation lands lower.
    let bw = run_bandwidth_experiment(Axis::X, PlantMode::Free, &ideal_with_tau(0.5), 0).unwrap();
    let c = bw.crossing_hz.unwrap();
    assert!(c > 0.1 && c < 0.5, "{c}");
    assert_relative_eq!(c, 0.26, epsilon = 0.03);
}

#[test]
fn bandwidth_decreases_with_tau() {
    let mut last = f64::INFINITY;
    for tau in [0.01, 0.053, 0.15, 0.5] {
        let bw = run_bandwidth_experiment(Axis::Z, PlantMode::Free, &ideal_with_tau(tau), 0).unwrap();
        // Beyond the grid counts as faster than anything on it.
        let c = bw.crossing_hz.unwrap_or(f64::INFINITY);
        assert!(c <= last, "tau {tau}: {c} > {last}");
        last = c;
    }
    assert!(last.is_finite());
}

#[test]
fn corner_frequency_magnitude_is_minus_3db() {
    // Chain corner for tau = 0.053 s sits at 1 / (2 pi tau) = 3.003 Hz.
    let f = 1.0 / (2.0 * PI * 0.053);
    let row = run_frequency(Axis::X, PlantMode::Free, f, &ideal_with_tau(0.053), 0).unwrap();
    assert_relative_eq!(row.magnitude_ratio.unwrap(), FRAC_1_SQRT_2, epsilon = 0.03);
}

#[test]
fn slow_drive_passes_through() {
    let row = run_frequency(Axis::Y, PlantMode::Free, 0.1, &ideal_with_tau(0.053), 0).unwrap();
    assert!(row.magnitude_ratio.unwrap() >= 0.99);
}
