//! Fixed-step plant: motors -> belt stages -> nuts -> shaft -> encoders.

use core::fmt;

use super::encoder::{EncoderMount, EncoderRole, EncoderSpec, EncoderState};
use super::motor::{MotorRole, MotorSpec, MotorState, DEG_PER_SEC_PER_RPM};
use super::transmission::{transmission_output, TransmissionConfig};
use crate::kinematics::{forward_kinematics, NutAngles, ScrewSpec, ShaftPose};

/// Largest accepted integration step, seconds.
pub const MAX_DT: f64 = 0.1;

/// Default integration step, seconds.
pub const DEFAULT_DT: f64 = 0.001;

/// Largest accepted relative speed mismatch.
pub const MAX_MISMATCH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantError {
    InvalidStep(f64),
    InvalidMismatch(f64),
    StrokeExceeded { insertion: f64, limits: StrokeLimits },
}

impl fmt::Display for PlantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlantError::InvalidStep(dt) => {
                write!(f, "integration step must lie in (0, {MAX_DT}] s, got {dt}")
            }
            PlantError::InvalidMismatch(eps) => {
                write!(f, "speed mismatch must satisfy |epsilon| < {MAX_MISMATCH}, got {eps}")
            }
            PlantError::StrokeExceeded { insertion, limits } => write!(
                f,
                "insertion {insertion} mm outside stroke [{}, {}] mm",
                limits.min, limits.max
            ),
        }
    }
}

impl core::error::Error for PlantError {}

/// Allowed insertion range, mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeLimits {
    pub min: f64,
    pub max: f64,
}

impl StrokeLimits {
    pub fn contains(&self, insertion: f64) -> bool {
        (self.min..=self.max).contains(&insertion)
    }
}

/// Static description of the drive hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drivetrain {
    pub screw: ScrewSpec,
    /// Belt stage between IM and the screw nut.
    pub screw_transmission: TransmissionConfig,
    /// Belt stage between RM and the spline nut.
    pub spline_transmission: TransmissionConfig,
    pub insertion_motor: MotorSpec,
    pub rotary_motor: MotorSpec,
    pub ie: EncoderSpec,
    pub re: EncoderSpec,
    pub stroke: Option<StrokeLimits>,
}

impl Default for Drivetrain {
    fn default() -> Self {
        Self {
            screw: ScrewSpec::PROTOTYPE,
            screw_transmission: TransmissionConfig::PROTOTYPE,
            spline_transmission: TransmissionConfig::PROTOTYPE,
            insertion_motor: MotorSpec::prototype(MotorRole::Insertion),
            rotary_motor: MotorSpec::prototype(MotorRole::Rotary),
            ie: EncoderSpec::prototype(EncoderRole::Ie),
            re: EncoderSpec::prototype(EncoderRole::Re),
            stroke: None,
        }
    }
}

impl Drivetrain {
    pub fn motor_spec(&self, role: MotorRole) -> &MotorSpec {
        match role {
            MotorRole::Insertion => &self.insertion_motor,
            MotorRole::Rotary => &self.rotary_motor,
        }
    }

    /// Insertion change per encoder count, mm (IE side).
    pub fn insertion_quantum(&self) -> f64 {
        let nut_counts = self.nut_counts_per_rev(&self.ie, &self.screw_transmission);
        self.screw.lead() / nut_counts
    }

    /// Counts seen per revolution of the nut the encoder measures.
    pub fn nut_counts_per_rev(&self, enc: &EncoderSpec, cfg: &TransmissionConfig) -> f64 {
        let cpr = f64::from(enc.counts_per_rev());
        match enc.mount() {
            EncoderMount::Nut => cpr,
            EncoderMount::Motor => cpr / cfg.ratio(),
        }
    }

    /// Advance the plant by one fixed step.
    pub fn step(&self, s: &DriveState, dt: f64) -> Result<DriveState, PlantError> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(PlantError::InvalidStep(dt));
        }
        let insertion_motor = s.insertion_motor.step(dt);
        let rotary_motor = s.rotary_motor.step(dt);

        let screw_rate = transmission_output(insertion_motor.actual_speed, &self.screw_transmission);
        let spline_rate = transmission_output(rotary_motor.actual_speed, &self.spline_transmission);
        let nuts = NutAngles {
            screw: s.nuts.screw + screw_rate * DEG_PER_SEC_PER_RPM * dt,
            spline: s.nuts.spline + spline_rate * DEG_PER_SEC_PER_RPM * dt,
        };
        let pose = forward_kinematics(nuts, &self.screw);
        if let Some(limits) = self.stroke {
            if !limits.contains(pose.insertion) {
                return Err(PlantError::StrokeExceeded {
                    insertion: pose.insertion,
                    limits,
                });
            }
        }

        let ie_angle = match self.ie.mount() {
            EncoderMount::Nut => nuts.screw,
            EncoderMount::Motor => insertion_motor.angle,
        };
        let re_angle = match self.re.mount() {
            EncoderMount::Nut => nuts.spline,
            EncoderMount::Motor => rotary_motor.angle,
        };

        Ok(DriveState {
            insertion_motor,
            rotary_motor,
            nuts,
            ie: s.ie.sample(&self.ie, ie_angle),
            re: s.re.sample(&self.re, re_angle),
            pose,
            time: s.time + dt,
        })
    }
}

/// Complete plant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState {
    pub insertion_motor: MotorState,
    pub rotary_motor: MotorState,
    pub nuts: NutAngles,
    pub ie: EncoderState,
    pub re: EncoderState,
    pub pose: ShaftPose,
    pub time: f64,
}

impl Default for DriveState {
    fn default() -> Self {
        Self {
            insertion_motor: MotorState::default(),
            rotary_motor: MotorState::default(),
            nuts: NutAngles::default(),
            ie: EncoderState::new(),
            re: EncoderState::new(),
            pose: ShaftPose::default(),
            time: 0.0,
        }
    }
}

impl DriveState {
    pub fn motor(&self, role: MotorRole) -> &MotorState {
        match role {
            MotorRole::Insertion => &self.insertion_motor,
            MotorRole::Rotary => &self.rotary_motor,
        }
    }

    pub fn motor_mut(&mut self, role: MotorRole) -> &mut MotorState {
        match role {
            MotorRole::Insertion => &mut self.insertion_motor,
            MotorRole::Rotary => &mut self.rotary_motor,
        }
    }

    /// Put a relative speed error `epsilon` on the insertion motor.
    pub fn with_speed_mismatch(mut self, epsilon: f64) -> Result<DriveState, PlantError> {
        if !(epsilon.is_finite() && epsilon.abs() < MAX_MISMATCH) {
            return Err(PlantError::InvalidMismatch(epsilon));
        }
        self.insertion_motor.mismatch_factor = 1.0 + epsilon;
        Ok(self)
    }
}

/// Free-function form of [`DriveState::with_speed_mismatch`].
pub fn apply_speed_mismatch(s: &DriveState, epsilon: f64) -> Result<DriveState, PlantError> {
    s.with_speed_mismatch(epsilon)
}
