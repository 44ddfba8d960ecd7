//! Distance-proportional measurement noise and its calibration.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constants::AccuracyRow;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseError {
    NegativeSigma { intercept: f64, slope: f64 },
    NonFinite,
}

impl fmt::Display for NoiseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseError::NegativeSigma { intercept, slope } => write!(
                f,
                "noise sigma terms must be non-negative (intercept {intercept}, slope {slope})"
            ),
            NoiseError::NonFinite => write!(f, "noise model terms must be finite"),
        }
    }
}

impl core::error::Error for NoiseError {}

/// Measurement error with spread and bias growing with commanded distance.
///
/// A measurement of a move to `target` is off by
/// `N(bias_slope * target, sigma_intercept + sigma_slope * |target|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Axis units.
    pub sigma_intercept: f64,
    /// Axis units per unit of target.
    pub sigma_slope: f64,
    pub bias_slope: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// No noise at all.
    pub const fn none() -> Self {
        Self {
            sigma_intercept: 0.0,
            sigma_slope: 0.0,
            bias_slope: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let terms = [self.sigma_intercept, self.sigma_slope, self.bias_slope];
        if terms.iter().any(|t| !t.is_finite()) {
            return Err(NoiseError::NonFinite);
        }
        if self.sigma_intercept < 0.0 || self.sigma_slope < 0.0 {
            return Err(NoiseError::NegativeSigma {
                intercept: self.sigma_intercept,
                slope: self.sigma_slope,
            });
        }
        Ok(())
    }

    pub fn sigma_at(&self, target: f64) -> f64 {
        self.sigma_intercept + self.sigma_slope * target.abs()
    }

    pub fn bias_at(&self, target: f64) -> f64 {
        self.bias_slope * target
    }

    /// Draw one measurement error for a move to `target`.
    pub fn sample_error<R: Rng + ?Sized>(&self, target: f64, rng: &mut R) -> f64 {
        let sigma = self.sigma_at(target);
        if sigma == 0.0 {
            return self.bias_at(target);
        }
        // sigma is finite and positive once validated
        let normal = Normal::new(self.bias_at(target), sigma).expect("validated noise model");
        normal.sample(rng)
    }

    /// Generator for one trial. Each (key, repetition) pair gets its own
    /// stream so trials are independent of evaluation order.
    pub fn trial_rng(&self, key: u64, repetition: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ key.rotate_left(29));
        rng.set_stream(repetition);
        rng
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// One `(target, mean error, standard deviation)` observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRow {
    pub target: f64,
    pub mean_error: f64,
    pub std_dev: f64,
}

impl From<&AccuracyRow> for CalibrationRow {
    fn from(r: &AccuracyRow) -> Self {
        Self {
            target: r.target,
            mean_error: r.mean_error,
            std_dev: r.std_dev,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationError {
    TooFewRows(usize),
    /// All targets share the same magnitude, so the slope is undetermined.
    Degenerate,
    NonFinite(usize),
    Noise(NoiseError),
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::TooFewRows(n) => {
                write!(f, "calibration needs at least 2 rows, got {n}")
            }
            CalibrationError::Degenerate => {
                write!(f, "calibration targets are all equal; slope is undetermined")
            }
            CalibrationError::NonFinite(i) => write!(f, "calibration row {i} is not finite"),
            CalibrationError::Noise(e) => write!(f, "fitted model is invalid: {e}"),
        }
    }
}

impl core::error::Error for CalibrationError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: NoiseModel,
    /// `std_dev - sigma_at(target)` per row.
    pub sigma_residuals: Vec<f64>,
    /// `mean_error - bias_at(target)` per row.
    pub bias_residuals: Vec<f64>,
}

/// Least-squares fit of a [`NoiseModel`] to accuracy rows.
///
/// Spread is fitted as an affine function of `|target|`; bias as a line
/// through the origin in `target`. The returned model has seed 0.
pub fn calibrate_noise(rows: &[CalibrationRow]) -> Result<Calibration, CalibrationError> {
    if rows.len() < 2 {
        return Err(CalibrationError::TooFewRows(rows.len()));
    }
    if let Some(i) = rows
        .iter()
        .position(|r| !(r.target.is_finite() && r.mean_error.is_finite() && r.std_dev.is_finite()))
    {
        return Err(CalibrationError::NonFinite(i));
    }
    let n = rows.len() as f64;
    let x_mean = rows.iter().map(|r| r.target.abs()).sum::<f64>() / n;
    let y_mean = rows.iter().map(|r| r.std_dev).sum::<f64>() / n;
    let sxx: f64 = rows
        .iter()
        .map(|r| (r.target.abs() - x_mean) * (r.target.abs() - x_mean))
        .sum();
    if sxx == 0.0 {
        return Err(CalibrationError::Degenerate);
    }
    let sxy: f64 = rows
        .iter()
        .map(|r| (r.target.abs() - x_mean) * (r.std_dev - y_mean))
        .sum();
    let sigma_slope = sxy / sxx;
    let sigma_intercept = y_mean - sigma_slope * x_mean;

    let stt: f64 = rows.iter().map(|r| r.target * r.target).sum();
    let stm: f64 = rows.iter().map(|r| r.target * r.mean_error).sum();
    let bias_slope = stm / stt;

    let model = NoiseModel {
        sigma_intercept,
        sigma_slope,
        bias_slope,
        seed: 0,
    };
    model.validate().map_err(CalibrationError::Noise)?;
    Ok(Calibration {
        model,
        sigma_residuals: rows.iter().map(|r| r.std_dev - model.sigma_at(r.target)).collect(),
        bias_residuals: rows.iter().map(|r| r.mean_error - model.bias_at(r.target)).collect(),
    })
}
