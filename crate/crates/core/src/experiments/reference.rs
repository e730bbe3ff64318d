//! Hardware measurements of the physical device, bundled for side-by-side
//! comparison in reports. Ranges are radii about the preload configuration.

use serde::{Deserialize, Serialize};

use super::targets::Level;

pub const REFERENCE_DATASET_VERSION: &str = "hw-2024.1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub position_range_mm: f64,
    pub force_range_n: f64,
    pub position_error_mm: (f64, f64),
    /// Mean and standard deviation of the force path error (N).
    pub force_error_n: (f64, f64),
}

const fn row(pr: f64, fr: f64, pe: (f64, f64), fe: (f64, f64)) -> ReferenceRow {
    ReferenceRow {
        position_range_mm: pr,
        force_range_n: fr,
        position_error_mm: pe,
        force_error_n: fe,
    }
}

const MIDDLE: [(&str, ReferenceRow); 12] = [
    ("0", row(5.60, 1.13, (0.47, 0.25), (0.07, 0.03))),
    ("30", row(6.00, 1.01, (0.73, 0.37), (0.10, 0.05))),
    ("60", row(5.97, 1.06, (0.92, 0.66), (0.24, 0.14))),
    ("90", row(4.68, 1.32, (0.73, 0.53), (0.09, 0.05))),
    ("120", row(4.48, 1.29, (0.44, 0.29), (0.05, 0.03))),
    ("150", row(5.08, 1.48, (0.47, 0.25), (0.06, 0.04))),
    ("180", row(4.88, 1.36, (0.67, 0.26), (0.30, 0.14))),
    ("210", row(4.84, 1.31, (0.54, 0.28), (0.14, 0.07))),
    ("240", row(5.68, 1.20, (0.46, 0.23), (0.10, 0.06))),
    ("270", row(5.89, 1.09, (0.55, 0.27), (0.13, 0.04))),
    ("300", row(5.75, 1.17, (1.03, 0.55), (0.17, 0.08))),
    ("330", row(5.32, 1.04, (0.82, 0.47), (0.19, 0.06))),
];

const LOWER: [(&str, ReferenceRow); 6] = [
    ("30", row(3.31, 2.94, (0.59, 0.38), (0.04, 0.02))),
    ("90", row(3.97, 2.90, (0.85, 0.51), (0.15, 0.05))),
    ("150", row(3.76, 1.94, (0.66, 0.43), (0.27, 0.13))),
    ("210", row(3.18, 2.91, (0.63, 0.50), (0.06, 0.03))),
    ("270", row(3.99, 2.78, (0.87, 0.50), (0.26, 0.16))),
    ("330", row(4.20, 2.79, (0.86, 0.52), (0.10, 0.03))),
];

const UPPER: [(&str, ReferenceRow); 6] = [
    ("30", row(4.98, 2.31, (0.23, 0.12), (0.14, 0.07))),
    ("90", row(4.59, 2.23, (0.55, 0.36), (0.24, 0.13))),
    ("150", row(3.96, 2.23, (0.47, 0.35), (0.48, 0.31))),
    ("210", row(3.88, 2.45, (0.31, 0.16), (0.28, 0.14))),
    ("270", row(4.76, 2.26, (0.41, 0.21), (0.42, 0.20))),
    ("330", row(4.83, 2.77, (0.35, 0.16), (0.49, 0.30))),
];

const Z_PLUS: ReferenceRow = row(9.25, 6.79, (1.61, 0.26), (0.13, 0.05));
const Z_MINUS: ReferenceRow = row(4.89, 6.01, (1.02, 0.65), (0.27, 0.19));

/// Reference row for a path label as produced by
/// [`PathTargetSet::label`](super::targets::PathTargetSet::label).
pub fn reference_row(level: Level, label: &str) -> Option<ReferenceRow> {
    let find = |rows: &[(&str, ReferenceRow)]| {
        rows.iter().find(|(l, _)| *l == label).map(|(_, r)| *r)
    };
    match level {
        Level::Lower => find(&LOWER),
        Level::Middle => find(&MIDDLE),
        Level::Upper => find(&UPPER),
        Level::ZPlus => Some(Z_PLUS),
        Level::ZMinus => Some(Z_MINUS),
    }
}

/// Level-averaged hardware position path error (mm).
pub fn mean_position_error(level: Level) -> f64 {
    let mean = |rows: &[(&str, ReferenceRow)]| {
        rows.iter().map(|(_, r)| r.position_error_mm.0).sum::<f64>() / rows.len() as f64
    };
    match level {
        Level::Lower => mean(&LOWER),
        Level::Middle => mean(&MIDDLE),
        Level::Upper => mean(&UPPER),
        Level::ZPlus => Z_PLUS.position_error_mm.0,
        Level::ZMinus => Z_MINUS.position_error_mm.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::targets::generate_targets;

    #[test]
    fn every_target_has_a_reference() {
        for level in Level::ALL {
            let set = generate_targets(level);
            for i in 0..set.targets.len() {
                assert!(reference_row(level, &set.label(i)).is_some(), "{level} {}", set.label(i));
            }
        }
    }

    #[test]
    fn anchor_values() {
        assert_eq!(reference_row(Level::ZMinus, "Z-").unwrap().force_range_n, 6.01);
        assert_eq!(reference_row(Level::Middle, "30").unwrap().force_range_n, 1.01);
        assert_eq!(reference_row(Level::Middle, "30").unwrap().position_range_mm, 6.00);
        assert!(reference_row(Level::Lower, "0").is_none());
    }
}
