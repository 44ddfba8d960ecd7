use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    Empty,
    NonFinite { index: usize, value: f64 },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::Empty => write!(f, "no samples"),
            StatsError::NonFinite { index, value } => {
                write!(f, "sample {index} is not finite ({value})")
            }
        }
    }
}

impl core::error::Error for StatsError {}

/// Accuracy summary for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentStats {
    pub target: f64,
    /// Mean of `sample - target`.
    pub mean_error: f64,
    /// Sample standard deviation (n - 1) of `sample - target`; zero for one sample.
    pub std_dev: f64,
    /// Measured positions in trial order.
    pub samples: Vec<f64>,
}

impl ExperimentStats {
    /// Summarise measured positions against `target`.
    ///
    /// Sums run over the sorted errors so the result does not depend on
    /// trial order.
    pub fn from_samples(target: f64, samples: Vec<f64>) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::Empty);
        }
        if !target.is_finite() {
            return Err(StatsError::NonFinite {
                index: usize::MAX,
                value: target,
            });
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(StatsError::NonFinite { index, value });
        }
        let mut errors: Vec<f64> = samples.iter().map(|s| s - target).collect();
        errors.sort_by(f64::total_cmp);
        let n = errors.len() as f64;
        let mean_error = errors.iter().sum::<f64>() / n;
        let std_dev = if errors.len() > 1 {
            let ss: f64 = errors.iter().map(|e| (e - mean_error) * (e - mean_error)).sum();
            libm::sqrt(ss / (n - 1.0))
        } else {
            0.0
        };
        Ok(Self {
            target,
            mean_error,
            std_dev,
            samples,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}
