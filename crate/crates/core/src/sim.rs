//! Closed-loop simulator: a [`Controller`] stepped every control period over
//! a [`Drivetrain`] integrated at a finer fixed step.

use core::fmt;

use crate::control::{
    ControlError, ControlOutput, Controller, ControllerConfig, ControllerMode, ControllerState,
    DisplayedPosition,
};
use crate::drivetrain::{DriveState, Drivetrain, MotorRole, PlantError, DEFAULT_DT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimError {
    Plant(PlantError),
    Control(ControlError),
    /// Control period is not a whole number of plant steps.
    IncommensuratePeriod { control_period: f64, plant_dt: f64 },
    NotSettled { time: f64 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Plant(e) => e.fmt(f),
            SimError::Control(e) => e.fmt(f),
            SimError::IncommensuratePeriod {
                control_period,
                plant_dt,
            } => write!(
                f,
                "control period {control_period} s is not a multiple of plant step {plant_dt} s"
            ),
            SimError::NotSettled { time } => write!(f, "did not settle within {time} s"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<PlantError> for SimError {
    fn from(e: PlantError) -> Self {
        SimError::Plant(e)
    }
}

impl From<ControlError> for SimError {
    fn from(e: ControlError) -> Self {
        SimError::Control(e)
    }
}

/// Everything needed to build a [`Simulator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub drivetrain: Drivetrain,
    pub controller: ControllerConfig,
    /// Plant integration step, seconds.
    pub plant_dt: f64,
    /// Relative speed error of the insertion motor.
    pub mismatch: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            drivetrain: Drivetrain::default(),
            controller: ControllerConfig::default(),
            plant_dt: DEFAULT_DT,
            mismatch: 0.0,
        }
    }
}

/// Control ticks the loop must stay quiet before it counts as settled.
pub const SETTLE_HOLD_TICKS: u32 = 5;

#[derive(Debug, Clone)]
pub struct Simulator {
    controller: Controller,
    plant_dt: f64,
    substeps: u32,
    drive: DriveState,
    ctrl: ControllerState,
    last: Option<ControlOutput>,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        let controller = Controller::new(cfg.controller, cfg.drivetrain)?;
        if !(cfg.plant_dt > 0.0 && cfg.plant_dt <= crate::drivetrain::MAX_DT) {
            return Err(PlantError::InvalidStep(cfg.plant_dt).into());
        }
        let ratio = cfg.controller.control_period / cfg.plant_dt;
        let substeps = libm::round(ratio);
        if substeps < 1.0 || libm::fabs(ratio - substeps) > 1e-9 * ratio {
            return Err(SimError::IncommensuratePeriod {
                control_period: cfg.controller.control_period,
                plant_dt: cfg.plant_dt,
            });
        }
        let drive = DriveState::default().with_speed_mismatch(cfg.mismatch)?;
        let ctrl = controller.initial_state();
        Ok(Self {
            controller,
            plant_dt: cfg.plant_dt,
            substeps: substeps as u32,
            drive,
            ctrl,
            last: None,
        })
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn drive(&self) -> &DriveState {
        &self.drive
    }

    pub fn controller_state(&self) -> &ControllerState {
        &self.ctrl
    }

    pub fn last_output(&self) -> Option<&ControlOutput> {
        self.last.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.drive.time
    }

    pub fn mode(&self) -> ControllerMode {
        self.ctrl.mode
    }

    /// Current operator display.
    pub fn display(&self) -> DisplayedPosition {
        self.controller
            .display(&self.ctrl, self.drive.ie.raw_counts, self.drive.re.raw_counts)
    }

    pub fn set_insertion_target(&mut self, mm: f64) {
        self.ctrl.insertion_target = mm;
    }

    pub fn set_rotary_target(&mut self, deg: f64) {
        self.ctrl.rotary_target = deg;
    }

    pub fn set_rotation_enable(&mut self, on: bool) {
        self.ctrl = self.controller.toggle_rotation_enable(
            &self.ctrl,
            on,
            self.drive.ie.raw_counts,
            self.drive.re.raw_counts,
        );
        // the freeze takes effect with the next sample
        self.drive.ie.counting_enabled = !self.freezes_ie();
    }

    fn freezes_ie(&self) -> bool {
        self.ctrl.mode == ControllerMode::RotationEnabled
            && self.controller.config().observer == crate::control::ObserverMethod::Freeze
    }

    pub fn set_speed(&mut self, role: MotorRole, rpm: f64) -> Result<(), SimError> {
        self.ctrl = self.controller.set_speed(&self.ctrl, role, rpm)?;
        Ok(())
    }

    /// Engage or release the emergency stop. Engaging disables both motors
    /// immediately.
    pub fn set_estop(&mut self, engaged: bool) {
        self.ctrl.estop = engaged;
        if engaged {
            self.drive.insertion_motor.enabled = false;
            self.drive.rotary_motor.enabled = false;
        }
    }

    /// Run one control period.
    pub fn tick(&mut self) -> Result<ControlOutput, SimError> {
        let (out, next) = self
            .controller
            .tick(&self.ctrl, &self.drive.ie, &self.drive.re)?;
        self.ctrl = next;
        let train = *self.controller.drivetrain();
        self.drive
            .insertion_motor
            .apply_command(&out.insertion, &train.insertion_motor);
        self.drive
            .rotary_motor
            .apply_command(&out.rotary, &train.rotary_motor);
        self.drive.ie.counting_enabled = !out.freeze_ie;
        for _ in 0..self.substeps {
            self.drive = train.step(&self.drive, self.plant_dt)?;
        }
        self.last = Some(out);
        Ok(out)
    }

    /// Both axes inside their deadbands with both motors off.
    pub fn is_at_rest(&self) -> bool {
        let Some(out) = self.last else {
            return false;
        };
        let cfg = self.controller.config();
        let disp = self.display();
        let insertion_ok = self.ctrl.mode == ControllerMode::RotationEnabled
            || (self.ctrl.insertion_target - disp.insertion).abs() <= cfg.insertion_tol;
        let rotary_ok = (self.ctrl.rotary_target - disp.rotary).abs() <= cfg.rotary_tol;
        insertion_ok && rotary_ok && !out.insertion.enabled && !out.rotary.enabled
    }

    /// Tick until at rest for [`SETTLE_HOLD_TICKS`] consecutive ticks.
    ///
    /// Returns the time at which the loop first came to rest. Gives up after
    /// `timeout` seconds of simulated time.
    pub fn run_until_settled(&mut self, timeout: f64) -> Result<f64, SimError> {
        let deadline = self.time() + timeout;
        let mut quiet = 0;
        let mut rest_since = None;
        while self.time() < deadline {
            self.tick()?;
            if self.is_at_rest() {
                rest_since.get_or_insert(self.time());
                quiet += 1;
                if quiet >= SETTLE_HOLD_TICKS {
                    return Ok(rest_since.unwrap_or(self.time()));
                }
            } else {
                quiet = 0;
                rest_since = None;
            }
        }
        Err(SimError::NotSettled { time: timeout })
    }
}
