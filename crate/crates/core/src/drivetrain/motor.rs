use core::fmt;

/// Degrees per second for one rpm.
pub const DEG_PER_SEC_PER_RPM: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotorRole {
    /// IM, drives the screw nut.
    Insertion,
    /// RM, drives the spline nut.
    Rotary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Cw,
    Ccw,
}

impl Direction {
    /// CW is the positive sense.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Cw => 1.0,
            Direction::Ccw => -1.0,
        }
    }

    pub fn of(signed_speed: f64) -> Direction {
        if signed_speed < 0.0 {
            Direction::Ccw
        } else {
            Direction::Cw
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotorSpecError {
    InvalidSpeedCap { rated: f64, cap: f64 },
}

impl fmt::Display for MotorSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotorSpecError::InvalidSpeedCap { rated, cap } => write!(
                f,
                "real speed cap must satisfy 0 < cap <= rated speed (cap {cap} rpm, rated {rated} rpm)"
            ),
        }
    }
}

impl core::error::Error for MotorSpecError {}

/// Ultrasonic motor modelled as a speed source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorSpec {
    rated_speed: f64,
    real_speed_cap: f64,
    role: MotorRole,
}

impl MotorSpec {
    /// Rated 150 rpm, measured 75 rpm under the driver settings used.
    pub const fn prototype(role: MotorRole) -> MotorSpec {
        MotorSpec {
            rated_speed: 150.0,
            real_speed_cap: 75.0,
            role,
        }
    }

    pub fn new(rated_speed: f64, real_speed_cap: f64, role: MotorRole) -> Result<Self, MotorSpecError> {
        let valid = rated_speed.is_finite()
            && real_speed_cap.is_finite()
            && real_speed_cap > 0.0
            && real_speed_cap <= rated_speed;
        if !valid {
            return Err(MotorSpecError::InvalidSpeedCap {
                rated: rated_speed,
                cap: real_speed_cap,
            });
        }
        Ok(Self {
            rated_speed,
            real_speed_cap,
            role,
        })
    }

    pub fn rated_speed(&self) -> f64 {
        self.rated_speed
    }

    pub fn real_speed_cap(&self) -> f64 {
        self.real_speed_cap
    }

    pub fn role(&self) -> MotorRole {
        self.role
    }
}

/// What a controller asks of one motor for the next control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorCommand {
    pub target: MotorRole,
    pub enabled: bool,
    pub direction: Direction,
    /// Unsigned, rpm.
    pub speed: f64,
}

impl MotorCommand {
    pub fn disabled(target: MotorRole) -> Self {
        Self {
            target,
            enabled: false,
            direction: Direction::Cw,
            speed: 0.0,
        }
    }

    /// Enabled command for a signed speed. Zero speed still counts as enabled.
    pub fn signed(target: MotorRole, signed_speed: f64) -> Self {
        Self {
            target,
            enabled: true,
            direction: Direction::of(signed_speed),
            speed: signed_speed.abs(),
        }
    }

    /// Signed speed this command requests, zero when disabled.
    pub fn signed_speed(&self) -> f64 {
        if self.enabled {
            self.direction.sign() * self.speed
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorState {
    pub enabled: bool,
    pub direction: Direction,
    /// Unsigned commanded speed, rpm.
    pub commanded_speed: f64,
    /// Signed output speed, rpm.
    pub actual_speed: f64,
    /// Output shaft angle, degrees.
    pub angle: f64,
    /// Multiplier between commanded and delivered speed.
    pub mismatch_factor: f64,
}

impl Default for MotorState {
    fn default() -> Self {
        Self {
            enabled: false,
            direction: Direction::Cw,
            commanded_speed: 0.0,
            actual_speed: 0.0,
            angle: 0.0,
            mismatch_factor: 1.0,
        }
    }
}

impl MotorState {
    /// Latch a command, limiting the speed to the motor's real cap.
    pub fn apply_command(&mut self, cmd: &MotorCommand, spec: &MotorSpec) {
        self.enabled = cmd.enabled;
        self.direction = cmd.direction;
        let speed = if cmd.speed.is_finite() { cmd.speed.abs() } else { 0.0 };
        self.commanded_speed = speed.min(spec.real_speed_cap);
    }

    /// Speed the motor delivers for its current command.
    pub fn output_speed(&self) -> f64 {
        if self.enabled {
            self.direction.sign() * self.commanded_speed * self.mismatch_factor
        } else {
            0.0
        }
    }

    /// Advance by `dt` seconds at the commanded speed.
    pub fn step(&self, dt: f64) -> MotorState {
        let actual_speed = self.output_speed();
        MotorState {
            actual_speed,
            angle: self.angle + actual_speed * DEG_PER_SEC_PER_RPM * dt,
            ..*self
        }
    }
}
