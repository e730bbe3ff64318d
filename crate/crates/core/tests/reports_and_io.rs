use std::io::Write;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use softhaptic_core::actuator::{fit_pressure_length, read_calibration_csv, CalibrationSample};
use softhaptic_core::experiments::{run_path_experiment, ExperimentReport, Level};
use softhaptic_core::plant::{PlantConfig, PlantMode};
use softhaptic_core::workspace::workspace_sweep;
use softhaptic_core::{Config, DeviceModel};

#[test]
fn calibration_csv_fit_matches_qr_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let noise = Normal::new(0.0, 0.15).unwrap();
    let samples: Vec<CalibrationSample> = (0..=50)
        .step_by(5)
        .flat_map(|p| std::iter::repeat_n(p as f64, 3))
        .map(|p| CalibrationSample { pressure: p, length: 0.23 * p + 16.35 + noise.sample(&mut rng) })
        .collect();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "pressure_kpa,length_mm").unwrap();
    for s in &samples {
        writeln!(file, "{},{}", s.pressure, s.length).unwrap();
    }
    let read = read_calibration_csv(file.path()).unwrap();
    assert_eq!(read.len(), samples.len());
    let fit = fit_pressure_length(&read).unwrap();

    let a = DMatrix::from_fn(read.len(), 2, |i, j| if j == 0 { read[i].pressure } else { 1.0 });
    let b = DVector::from_iterator(read.len(), read.iter().map(|s| s.length));
    let qr = a.qr();
    let coef = qr.r().solve_upper_triangular(&(qr.q().transpose() * &b)).unwrap();
    assert_relative_eq!(fit.map.slope, coef[0], epsilon = 1e-10);
    assert_relative_eq!(fit.map.intercept, coef[1], epsilon = 1e-10);
    assert!((fit.map.slope - 0.23).abs() < 0.01);
}

#[test]
fn workspace_cloud_csv() {
    let cloud = workspace_sweep(&DeviceModel::default(), 3).unwrap();
    assert_eq!(cloud.points.len(), 27);
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("p1_kpa,p2_kpa,p3_kpa,x_mm,y_mm,z_mm\n"));
    assert_eq!(text.lines().count(), 28);
    let brute = cloud.points.iter().map(|p| (p.position - cloud.center).norm()).fold(0.0, f64::max);
    assert_eq!(cloud.max_radius, brute);
}

#[test]
fn report_carries_config_hash_and_flags() {
    let config = Config { plant: PlantConfig::ideal(), ..Config::default() };
    let mut report = ExperimentReport::new(&config, 4);
    assert_eq!(report.config_hash, config.hash());
    let (mut lower, runs) = run_path_experiment(Level::Lower, PlantMode::Free, &config, 4).unwrap();
    assert_eq!(runs.len(), lower.paths.len());
    assert!(runs.iter().all(|r| r.len() == config.experiment.repetitions));
    assert!(lower.paths.iter().all(|p| p.reference.is_some()));
    // Force one path above threshold to exercise the flag.
    lower.paths[0].error.mean = 2.0;
    lower.paths[0].above_jnd = lower.paths[0].error.mean > lower.jnd;
    report.levels.push(lower);
    let text = report.render_text();
    assert!(text.contains(&config.hash()));
    assert!(text.contains("ABOVE JND"));
    assert_eq!(report.above_jnd().count(), 1);

    let mut other = config.clone();
    other.controller.step_scale_c = 5.0;
    assert_ne!(other.hash(), config.hash());
}

#[test]
fn path_runs_are_reproducible() {
    let config = Config::default();
    let (a, _) = run_path_experiment(Level::Upper, PlantMode::Free, &config, 12).unwrap();
    let (b, _) = run_path_experiment(Level::Upper, PlantMode::Free, &config, 12).unwrap();
    assert_eq!(a, b);
}
