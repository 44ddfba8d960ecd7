//! Mode-switching bang-bang controller with an optional PID speed trim.
//!
//! In `Normal` mode each axis is driven by its own motor: IM moves the
//! insertion reading, RM the rotary reading. In `RotationEnabled` mode RM is
//! driven toward the rotary target, IM is slaved to the same nut speed so the
//! shaft turns without advancing, and the insertion encoder stops counting.
//!
//! Each axis is bang-bang: off inside the deadband, otherwise on at the
//! configured speed. On the last period before the target the speed is cut
//! so that one period of travel ends on the target instead of overshooting
//! it; without that the loop would chatter across any deadband narrower
//! than one period of full-speed travel.

mod observer;
mod pid;

use core::fmt;

pub use observer::{
    displayed_position, drivetrain_display, DisplayedPosition, ObserverMethod, ObserverState,
};
pub use pid::{pid_compensation_update, PidError, PidGains, PidState};

use crate::drivetrain::{
    Drivetrain, EncoderMount, EncoderSpec, EncoderState, MotorCommand, MotorRole,
    TransmissionConfig,
};

/// Default control period, seconds.
pub const DEFAULT_CONTROL_PERIOD: f64 = 0.01;

/// Motor speed giving the 168 rpm nut speed measured through the 1:2.5 stage.
pub const DEFAULT_AXIS_SPEED: f64 = 67.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerMode {
    #[default]
    Normal,
    RotationEnabled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlError {
    InvalidTolerance(&'static str, f64),
    InvalidSpeed { role: MotorRole, speed: f64, cap: f64 },
    InvalidPeriod(f64),
    Pid(PidError),
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::InvalidTolerance(axis, tol) => {
                write!(f, "{axis} tolerance must be positive, got {tol}")
            }
            ControlError::InvalidSpeed { role, speed, cap } => {
                if speed.is_finite() && *speed > *cap {
                    write!(f, "{role:?} motor speed {speed} rpm exceeds real_speed_cap {cap} rpm")
                } else {
                    write!(f, "{role:?} motor speed must be positive, got {speed} rpm")
                }
            }
            ControlError::InvalidPeriod(p) => write!(f, "control period must be positive, got {p} s"),
            ControlError::Pid(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for ControlError {}

impl From<PidError> for ControlError {
    fn from(e: PidError) -> Self {
        ControlError::Pid(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Insertion deadband, mm.
    pub insertion_tol: f64,
    /// Rotary deadband, degrees.
    pub rotary_tol: f64,
    /// IM speed away from the target, rpm.
    pub insertion_speed: f64,
    /// RM speed away from the target, rpm.
    pub rotary_speed: f64,
    /// seconds
    pub control_period: f64,
    pub pid: PidGains,
    pub pid_enabled: bool,
    pub observer: ObserverMethod,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            insertion_tol: 0.05,
            rotary_tol: 0.5,
            insertion_speed: DEFAULT_AXIS_SPEED,
            rotary_speed: DEFAULT_AXIS_SPEED,
            control_period: DEFAULT_CONTROL_PERIOD,
            pid: PidGains::default(),
            pid_enabled: false,
            observer: ObserverMethod::Freeze,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, train: &Drivetrain) -> Result<(), ControlError> {
        if !(self.insertion_tol > 0.0 && self.insertion_tol.is_finite()) {
            return Err(ControlError::InvalidTolerance("insertion", self.insertion_tol));
        }
        if !(self.rotary_tol > 0.0 && self.rotary_tol.is_finite()) {
            return Err(ControlError::InvalidTolerance("rotary", self.rotary_tol));
        }
        if !(self.control_period > 0.0 && self.control_period.is_finite()) {
            return Err(ControlError::InvalidPeriod(self.control_period));
        }
        check_speed(train, MotorRole::Insertion, self.insertion_speed)?;
        check_speed(train, MotorRole::Rotary, self.rotary_speed)?;
        self.pid.validate()?;
        Ok(())
    }
}

fn check_speed(train: &Drivetrain, role: MotorRole, speed: f64) -> Result<(), ControlError> {
    let cap = train.motor_spec(role).real_speed_cap();
    if speed > 0.0 && speed <= cap {
        Ok(())
    } else {
        Err(ControlError::InvalidSpeed { role, speed, cap })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub mode: ControllerMode,
    /// mm
    pub insertion_target: f64,
    /// degrees
    pub rotary_target: f64,
    /// Current coarse speeds, rpm. Start at the configured values.
    pub insertion_speed: f64,
    pub rotary_speed: f64,
    pub pid: PidState,
    pub observer: ObserverState,
    /// Latched emergency stop.
    pub estop: bool,
    /// Hardware counts (IE, RE) at the previous tick, for speed estimation.
    pub last_raw: (i64, i64),
}

/// Output of one bang-bang evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBangOutput {
    pub insertion: MotorCommand,
    pub rotary: MotorCommand,
    /// IE must not credit counts during the next period.
    pub freeze_ie: bool,
}

/// Everything a control tick decides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub insertion: MotorCommand,
    pub rotary: MotorCommand,
    pub freeze_ie: bool,
    pub display: DisplayedPosition,
    /// Speed error fed to the PID this tick, IM rpm.
    pub speed_error: Option<f64>,
    /// PID correction added to the IM command, rpm.
    pub correction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller {
    config: ControllerConfig,
    train: Drivetrain,
}

impl Controller {
    pub fn new(config: ControllerConfig, train: Drivetrain) -> Result<Self, ControlError> {
        config.validate(&train)?;
        Ok(Self { config, train })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn drivetrain(&self) -> &Drivetrain {
        &self.train
    }

    pub fn initial_state(&self) -> ControllerState {
        ControllerState {
            mode: ControllerMode::Normal,
            insertion_target: 0.0,
            rotary_target: 0.0,
            insertion_speed: self.config.insertion_speed,
            rotary_speed: self.config.rotary_speed,
            pid: PidState::default(),
            observer: ObserverState::default(),
            estop: false,
            last_raw: (0, 0),
        }
    }

    /// Change a coarse axis speed. Rejects speeds outside `(0, real_speed_cap]`.
    pub fn set_speed(
        &self,
        state: &ControllerState,
        role: MotorRole,
        speed: f64,
    ) -> Result<ControllerState, ControlError> {
        check_speed(&self.train, role, speed)?;
        let mut next = *state;
        match role {
            MotorRole::Insertion => next.insertion_speed = speed,
            MotorRole::Rotary => next.rotary_speed = speed,
        }
        Ok(next)
    }

    pub fn raw_display(&self, ie_counts: i64, re_counts: i64) -> DisplayedPosition {
        drivetrain_display(ie_counts, re_counts, &self.train)
    }

    /// Reading shown to the operator for the given hardware counts.
    pub fn display(&self, state: &ControllerState, ie_counts: i64, re_counts: i64) -> DisplayedPosition {
        state.observer.display(self.raw_display(ie_counts, re_counts))
    }

    /// Switch Rotation Enable on or off. Repeating the current setting is a no-op.
    pub fn toggle_rotation_enable(
        &self,
        state: &ControllerState,
        on: bool,
        ie_counts: i64,
        re_counts: i64,
    ) -> ControllerState {
        let mut next = *state;
        let raw = self.raw_display(ie_counts, re_counts);
        match (state.mode, on) {
            (ControllerMode::Normal, true) => {
                next.mode = ControllerMode::RotationEnabled;
                next.pid = PidState::default();
                if self.config.observer == ObserverMethod::Freeze {
                    next.observer.freeze(raw);
                }
            }
            (ControllerMode::RotationEnabled, false) => {
                next.mode = ControllerMode::Normal;
                next.observer.release(raw);
            }
            _ => {}
        }
        next
    }

    /// IM rpm -> insertion mm/s, signed by thread hand.
    fn insertion_rate_per_rpm(&self) -> f64 {
        let screw = &self.train.screw;
        screw.handedness().sign() * screw.lead() * self.train.screw_transmission.ratio() / 60.0
    }

    /// RM rpm -> rotation deg/s.
    fn rotary_rate_per_rpm(&self) -> f64 {
        6.0 * self.train.spline_transmission.ratio()
    }

    /// Unsigned speed level for one axis, or `None` inside the deadband.
    fn axis_level(&self, error: f64, tol: f64, coarse: f64, rate_per_rpm: f64, cap: f64) -> Option<f64> {
        if !(error.abs() > tol) {
            return None;
        }
        let travel_per_rpm = rate_per_rpm.abs() * self.config.control_period;
        Some(coarse.min(cap).min(error.abs() / travel_per_rpm))
    }

    /// Enable/disable and direction for both motors from the displayed position.
    pub fn bang_bang_update(
        &self,
        state: &ControllerState,
        disp: DisplayedPosition,
    ) -> (BangBangOutput, ControllerState) {
        let freeze_ie = state.mode == ControllerMode::RotationEnabled
            && self.config.observer == ObserverMethod::Freeze;
        if state.estop {
            let out = BangBangOutput {
                insertion: MotorCommand::disabled(MotorRole::Insertion),
                rotary: MotorCommand::disabled(MotorRole::Rotary),
                freeze_ie,
            };
            return (out, *state);
        }

        let rotary_err = state.rotary_target - disp.rotary;
        let rotary_rate = self.rotary_rate_per_rpm();
        let rm_cap = self.train.rotary_motor.real_speed_cap();
        let rotary = match self.axis_level(rotary_err, self.config.rotary_tol, state.rotary_speed, rotary_rate, rm_cap) {
            Some(level) => MotorCommand::signed(MotorRole::Rotary, level.copysign(rotary_err)),
            None => MotorCommand::disabled(MotorRole::Rotary),
        };

        let im_cap = self.train.insertion_motor.real_speed_cap();
        let insertion = match state.mode {
            ControllerMode::Normal => {
                let err = state.insertion_target - disp.insertion;
                let rate = self.insertion_rate_per_rpm();
                match self.axis_level(err, self.config.insertion_tol, state.insertion_speed, rate, im_cap) {
                    Some(level) => {
                        let signed = level.copysign(err) * rate.signum();
                        MotorCommand::signed(MotorRole::Insertion, signed)
                    }
                    None => MotorCommand::disabled(MotorRole::Insertion),
                }
            }
            ControllerMode::RotationEnabled => {
                if rotary.enabled {
                    // same nut speed on both sides
                    let follow = rotary.signed_speed() * self.train.spline_transmission.ratio()
                        / self.train.screw_transmission.ratio();
                    MotorCommand::signed(MotorRole::Insertion, follow.clamp(-im_cap, im_cap))
                } else {
                    MotorCommand::disabled(MotorRole::Insertion)
                }
            }
        };

        (
            BangBangOutput {
                insertion,
                rotary,
                freeze_ie,
            },
            *state,
        )
    }

    fn nut_rpm(&self, delta_counts: i64, enc: &EncoderSpec, cfg: &TransmissionConfig) -> f64 {
        let cpr = f64::from(enc.counts_per_rev());
        let nut_counts_per_rev = match enc.mount() {
            EncoderMount::Nut => cpr,
            EncoderMount::Motor => cpr / cfg.ratio(),
        };
        delta_counts as f64 / nut_counts_per_rev / self.config.control_period * 60.0
    }

    /// One control period: observe, decide, trim.
    pub fn tick(
        &self,
        state: &ControllerState,
        ie: &EncoderState,
        re: &EncoderState,
    ) -> Result<(ControlOutput, ControllerState), ControlError> {
        let raw = self.raw_display(ie.raw_counts, re.raw_counts);
        let display = state.observer.display(raw);
        let (bb, mut next) = self.bang_bang_update(state, display);
        next.observer.observe(raw);

        let d_ie = ie.raw_counts - state.last_raw.0;
        let d_re = re.raw_counts - state.last_raw.1;
        next.last_raw = (ie.raw_counts, re.raw_counts);

        let mut insertion = bb.insertion;
        let mut speed_error = None;
        let mut correction = 0.0;
        let trim = state.mode == ControllerMode::RotationEnabled
            && self.config.pid_enabled
            && insertion.enabled
            && !state.estop;
        if trim {
            let screw_nut = self.nut_rpm(d_ie, &self.train.ie, &self.train.screw_transmission);
            let spline_nut = self.nut_rpm(d_re, &self.train.re, &self.train.spline_transmission);
            // expressed as IM rpm
            let e = (spline_nut - screw_nut) / self.train.screw_transmission.ratio();
            let (u, pid) =
                pid_compensation_update(&self.config.pid, &state.pid, e, self.config.control_period)?;
            next.pid = pid;
            speed_error = Some(e);
            correction = u;
            let cap = self.train.insertion_motor.real_speed_cap();
            let trimmed = (insertion.signed_speed() + u).clamp(-cap, cap);
            insertion = MotorCommand::signed(MotorRole::Insertion, trimmed);
        }

        Ok((
            ControlOutput {
                insertion,
                rotary: bb.rotary,
                freeze_ie: bb.freeze_ie,
                display,
                speed_error,
                correction,
            },
            next,
        ))
    }
}
