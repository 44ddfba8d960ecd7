//! Measured values of the prototype and the derived constants built on them.

/// Lead of the 4-start 20x20 mm lead screw, mm/rev.
pub const LEAD_MM: f64 = 20.0;

/// Shaft revolutions in the long-rotation drift measurement (2520 degrees).
pub const DRIFT_REVOLUTIONS: u32 = 7;

/// Insertion accumulated over [`DRIFT_REVOLUTIONS`] of commanded pure rotation, mm.
pub const MEASURED_DRIFT_MM: f64 = 2.1;

/// Relative IM/RM speed mismatch that reproduces the measured drift.
///
/// Pure rotation with IM running `1 + eps` times faster than RM gains
/// `eps * revs` relative nut revolutions, i.e. `eps * lead * revs` mm of
/// insertion. Solving for the measured 2.1 mm over 7 revolutions:
/// `eps = 2.1 / (7 * 20) = 0.015`.
pub const CANONICAL_MISMATCH: f64 = MEASURED_DRIFT_MM / (DRIFT_REVOLUTIONS as f64 * LEAD_MM);

/// Nut speed measured through the 1:2.5 pulley stage with the shaft fitted, rpm.
pub const MEASURED_NUT_SPEED_RPM: f64 = 168.0;

/// Motor rated speed, rpm.
pub const RATED_MOTOR_SPEED_RPM: f64 = 150.0;

/// Motor speed actually reached, rpm.
pub const REAL_MOTOR_SPEED_RPM: f64 = 75.0;

/// Trials per target in the accuracy measurements.
pub const ACCURACY_REPETITIONS: u32 = 5;

/// One row of an accuracy table: target, mean error, standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    pub label: &'static str,
    pub target: f64,
    pub mean_error: f64,
    pub std_dev: f64,
}

const fn row(label: &'static str, target: f64, mean_error: f64, std_dev: f64) -> AccuracyRow {
    AccuracyRow {
        label,
        target,
        mean_error,
        std_dev,
    }
}

/// Insertion accuracy, mm (n = 5).
pub const INSERTION_ACCURACY: [AccuracyRow; 5] = [
    row("I1", 122.0, 0.1, 2.83),
    row("I2", 164.3, -1.9, 3.43),
    row("I3", 45.3, -0.94, 1.16),
    row("I4", 162.5, 1.08, 3.37),
    row("I5", 8.3, 1.1, 0.74),
];

/// Rotary accuracy, degrees (n = 5).
pub const ROTARY_ACCURACY: [AccuracyRow; 5] = [
    row("R1", 182.525, -1.325, 1.304),
    row("R2", 95.4, -1.06, 1.549),
    row("R3", 356.75, 1.45, 1.789),
    row("R4", 142.51, -0.79, 1.221),
    row("R5", 8.825, 0.835, 0.422),
];
