//! Discrete PID used to trim the insertion motor against the rotary motor.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PidError {
    NonPositiveStep(f64),
    InvalidGains,
}

impl fmt::Display for PidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PidError::NonPositiveStep(dt) => write!(f, "PID step must be positive, got {dt} s"),
            PidError::InvalidGains => write!(f, "PID gains and integral limit must be finite and non-negative"),
        }
    }
}

impl core::error::Error for PidError {}

/// Gains in rpm of correction per rpm of speed error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    /// 1/s
    pub ki: f64,
    /// s
    pub kd: f64,
    /// Bound on the integral contribution `ki * integral`, rpm.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.3,
            ki: 40.0,
            kd: 0.0,
            integral_limit: 10.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), PidError> {
        let ok = [self.kp, self.ki, self.kd, self.integral_limit]
            .iter()
            .all(|g| g.is_finite() && *g >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(PidError::InvalidGains)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Accumulated error, rpm*s.
    pub integral: f64,
    pub prev_error: f64,
}

/// One PID step. Returns the correction in rpm and the next state.
///
/// The integral is clamped so that its contribution never exceeds
/// `gains.integral_limit` in magnitude.
pub fn pid_compensation_update(
    gains: &PidGains,
    state: &PidState,
    speed_error: f64,
    dt: f64,
) -> Result<(f64, PidState), PidError> {
    if !(dt > 0.0) {
        return Err(PidError::NonPositiveStep(dt));
    }
    let mut integral = state.integral + speed_error * dt;
    if gains.ki > 0.0 {
        let bound = gains.integral_limit / gains.ki;
        integral = integral.clamp(-bound, bound);
    }
    let derivative = (speed_error - state.prev_error) / dt;
    let correction = gains.kp * speed_error + gains.ki * integral + gains.kd * derivative;
    Ok((
        correction,
        PidState {
            integral,
            prev_error: speed_error,
        },
    ))
}
