//! Scenario files.
//!
//! A scenario is a TOML document describing the drive hardware, the
//! controller, the measurement-noise model and a list of experiments. Every
//! table rejects keys it does not know, and every table may be omitted, in
//! which case the prototype values are used.
//!
//! ```toml
//! seed = 2024
//!
//! [screw]
//! lead = 20.0
//! starts = 4
//! handedness = "right"
//!
//! [transmission]
//! screw = "Slave Pulley 1"
//! spline = { master_teeth = 24, slave_teeth = 60 }
//!
//! [[experiment]]
//! kind = "accuracy"
//! axis = "insertion"
//! targets = [122.0, 164.3, 45.3, 162.5, 8.3]
//! repetitions = 5
//!
//! [[experiment]]
//! kind = "drift"
//! revolutions = 7
//! epsilon = 0.015
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use diffdrive_core::constants::{
    ACCURACY_REPETITIONS, CANONICAL_MISMATCH, DRIFT_REVOLUTIONS, INSERTION_ACCURACY, ROTARY_ACCURACY,
};
use diffdrive_core::control::{ControllerConfig, ObserverMethod, PidGains};
use diffdrive_core::drivetrain::{
    EncoderMount, EncoderRole, EncoderSpec, MotorRole, MotorSpec, Quadrature, TransmissionConfig,
    DEFAULT_DT,
};
use diffdrive_core::experiments::{calibrate_noise, Axis, CalibrationRow, NoiseModel};
use diffdrive_core::kinematics::{Handedness, ScrewSpec};
use diffdrive_core::{Drivetrain, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Parse(toml::de::Error),
    /// A value parsed but is not acceptable; `key` is its dotted path.
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            ConfigError::Parse(e) => write!(f, "invalid scenario: {e}"),
            ConfigError::Invalid { key, message } => write!(f, "invalid value for `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Io { source, .. } => Some(source),
            ConfigError::Parse(e) => Some(e),
            ConfigError::Invalid { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Seeds the measurement noise.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub screw: ScrewConfig,
    #[serde(default)]
    pub transmission: TransmissionSection,
    #[serde(default)]
    pub motors: MotorsConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, rename = "experiment", skip_serializing_if = "Vec::is_empty")]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandednessName {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScrewConfig {
    /// mm/rev
    pub lead: f64,
    pub starts: u32,
    pub handedness: HandednessName,
}

impl Default for ScrewConfig {
    fn default() -> Self {
        Self {
            lead: 20.0,
            starts: 4,
            handedness: HandednessName::Right,
        }
    }
}

/// A belt stage, either by table name or by tooth counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a slave pulley name or a table with master_teeth and slave_teeth")]
pub enum PulleySelection {
    Named(String),
    Teeth(PulleyTeeth),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulleyTeeth {
    pub master_teeth: u32,
    pub slave_teeth: u32,
}

impl Default for PulleySelection {
    fn default() -> Self {
        PulleySelection::Named("Slave Pulley 1".to_owned())
    }
}

impl PulleySelection {
    fn resolve(&self, key: &str) -> Result<TransmissionConfig, ConfigError> {
        match self {
            PulleySelection::Named(name) => {
                TransmissionConfig::slave_pulley(name).map_err(|e| ConfigError::invalid(key, e))
            }
            PulleySelection::Teeth(t) => TransmissionConfig::new(t.master_teeth, t.slave_teeth)
                .map_err(|e| ConfigError::invalid(key, e)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmissionSection {
    pub screw: PulleySelection,
    pub spline: PulleySelection,
}

/// Both motors share one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorsConfig {
    /// rpm
    pub rated_speed: f64,
    /// rpm
    pub real_speed_cap: f64,
}

impl Default for MotorsConfig {
    fn default() -> Self {
        let p = MotorSpec::prototype(MotorRole::Insertion);
        Self {
            rated_speed: p.rated_speed(),
            real_speed_cap: p.real_speed_cap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MountName {
    Nut,
    Motor,
}

/// Both encoders share one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub lines: u32,
    /// 1, 2 or 4
    pub quadrature: u32,
    pub mount: MountName,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            lines: 1250,
            quadrature: 4,
            mount: MountName::Nut,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    /// mm
    pub insertion_tol: f64,
    /// deg
    pub rotary_tol: f64,
    /// rpm
    pub insertion_speed: f64,
    /// rpm
    pub rotary_speed: f64,
    /// s
    pub control_period: f64,
    /// s
    pub plant_dt: f64,
    /// Relative speed error of the insertion motor.
    pub mismatch: f64,
    pub pid_enabled: bool,
    pub pid: PidSection,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            insertion_tol: c.insertion_tol,
            rotary_tol: c.rotary_tol,
            insertion_speed: c.insertion_speed,
            rotary_speed: c.rotary_speed,
            control_period: c.control_period,
            plant_dt: DEFAULT_DT,
            mismatch: 0.0,
            pid_enabled: c.pid_enabled,
            pid: PidSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidSection {
    pub kp: f64,
    /// 1/s
    pub ki: f64,
    /// s
    pub kd: f64,
    /// rpm
    pub integral_limit: f64,
}

impl Default for PidSection {
    fn default() -> Self {
        let g = PidGains::default();
        Self {
            kp: g.kp,
            ki: g.ki,
            kd: g.kd,
            integral_limit: g.integral_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Perfect measurements.
    None,
    /// Fitted to the built-in accuracy table for the axis.
    Calibrated,
    /// Explicit `sigma_intercept`, `sigma_slope` and `bias_slope`.
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub model: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_slope: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            model: NoiseKind::Calibrated,
            sigma_intercept: None,
            sigma_slope: None,
            bias_slope: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub insertion: NoiseSpec,
    pub rotary: NoiseSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Insertion,
    Rotary,
}

impl From<AxisName> for Axis {
    fn from(a: AxisName) -> Self {
        match a {
            AxisName::Insertion => Axis::Insertion,
            AxisName::Rotary => Axis::Rotary,
        }
    }
}

fn default_repetitions() -> u32 {
    ACCURACY_REPETITIONS
}

fn default_revolutions() -> u32 {
    DRIFT_REVOLUTIONS
}

fn default_epsilon() -> f64 {
    CANONICAL_MISMATCH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyExperiment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub axis: AxisName,
    pub targets: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftExperiment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_revolutions")]
    pub revolutions: u32,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Run with the PID speed trim.
    #[serde(default)]
    pub compensated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExperimentConfig {
    Accuracy(AccuracyExperiment),
    Drift(DriftExperiment),
}

impl ExperimentConfig {
    /// Section title used in reports.
    pub fn title(&self) -> String {
        match self {
            ExperimentConfig::Accuracy(AccuracyExperiment { name: Some(n), .. })
            | ExperimentConfig::Drift(DriftExperiment { name: Some(n), .. }) => n.clone(),
            ExperimentConfig::Accuracy(a) => match a.axis {
                AxisName::Insertion => "insertion accuracy".to_owned(),
                AxisName::Rotary => "rotary accuracy".to_owned(),
            },
            ExperimentConfig::Drift(d) if d.compensated => "compensated drift".to_owned(),
            ExperimentConfig::Drift(_) => "drift".to_owned(),
        }
    }
}

/// The fully checked form of a scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sim: SimConfig,
    pub insertion_noise: NoiseModel,
    pub rotary_noise: NoiseModel,
    pub experiments: Vec<ExperimentConfig>,
}

impl Scenario {
    pub fn noise(&self, axis: Axis) -> &NoiseModel {
        match axis {
            Axis::Insertion => &self.insertion_noise,
            Axis::Rotary => &self.rotary_noise,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            screw: ScrewConfig::default(),
            transmission: TransmissionSection::default(),
            motors: MotorsConfig::default(),
            encoder: EncoderConfig::default(),
            controller: ControllerSection::default(),
            noise: NoiseSection::default(),
            experiments: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn drivetrain(&self) -> Result<Drivetrain, ConfigError> {
        let hand = match self.screw.handedness {
            HandednessName::Right => Handedness::Right,
            HandednessName::Left => Handedness::Left,
        };
        let screw = ScrewSpec::new(self.screw.lead, self.screw.starts, hand).map_err(|e| {
            let key = if self.screw.starts == 0 { "screw.starts" } else { "screw.lead" };
            ConfigError::invalid(key, e)
        })?;
        let motor = |role| {
            MotorSpec::new(self.motors.rated_speed, self.motors.real_speed_cap, role)
                .map_err(|e| ConfigError::invalid("motors.real_speed_cap", e))
        };
        let quad = Quadrature::from_multiplier(self.encoder.quadrature)
            .ok_or_else(|| ConfigError::invalid("encoder.quadrature", "must be 1, 2 or 4"))?;
        let mount = match self.encoder.mount {
            MountName::Nut => EncoderMount::Nut,
            MountName::Motor => EncoderMount::Motor,
        };
        let ie = EncoderSpec::new(self.encoder.lines, quad, EncoderRole::Ie, mount)
            .map_err(|e| ConfigError::invalid("encoder.lines", e))?;
        Ok(Drivetrain {
            screw,
            screw_transmission: self.transmission.screw.resolve("transmission.screw")?,
            spline_transmission: self.transmission.spline.resolve("transmission.spline")?,
            insertion_motor: motor(MotorRole::Insertion)?,
            rotary_motor: motor(MotorRole::Rotary)?,
            ie,
            re: ie.with_role(EncoderRole::Re),
            stroke: None,
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let drivetrain = self.drivetrain()?;
        let c = &self.controller;
        let controller = ControllerConfig {
            insertion_tol: c.insertion_tol,
            rotary_tol: c.rotary_tol,
            insertion_speed: c.insertion_speed,
            rotary_speed: c.rotary_speed,
            control_period: c.control_period,
            pid: PidGains {
                kp: c.pid.kp,
                ki: c.pid.ki,
                kd: c.pid.kd,
                integral_limit: c.pid.integral_limit,
            },
            pid_enabled: c.pid_enabled,
            observer: ObserverMethod::Freeze,
        };
        let sim = SimConfig {
            drivetrain,
            controller,
            plant_dt: c.plant_dt,
            mismatch: c.mismatch,
        };
        // Building a simulator runs every remaining check.
        diffdrive_core::Simulator::new(&sim).map_err(|e| {
            use diffdrive_core::control::ControlError as C;
            use diffdrive_core::sim::SimError as S;
            let key = match &e {
                S::Control(C::InvalidTolerance("insertion", _)) => "controller.insertion_tol",
                S::Control(C::InvalidTolerance(..)) => "controller.rotary_tol",
                S::Control(C::InvalidSpeed { role: MotorRole::Insertion, .. }) => "controller.insertion_speed",
                S::Control(C::InvalidSpeed { .. }) => "controller.rotary_speed",
                S::Control(C::InvalidPeriod(_)) => "controller.control_period",
                S::Control(C::Pid(_)) => "controller.pid",
                S::Plant(diffdrive_core::drivetrain::PlantError::InvalidMismatch(_)) => "controller.mismatch",
                _ => "controller.plant_dt",
            };
            ConfigError::invalid(key, e)
        })?;
        Ok(sim)
    }

    pub fn noise_model(&self, axis: Axis) -> Result<NoiseModel, ConfigError> {
        let (spec, key, table) = match axis {
            Axis::Insertion => (&self.noise.insertion, "noise.insertion", &INSERTION_ACCURACY),
            Axis::Rotary => (&self.noise.rotary, "noise.rotary", &ROTARY_ACCURACY),
        };
        let terms = [
            ("sigma_intercept", spec.sigma_intercept),
            ("sigma_slope", spec.sigma_slope),
            ("bias_slope", spec.bias_slope),
        ];
        let model = match spec.model {
            NoiseKind::None | NoiseKind::Calibrated => {
                if let Some((name, _)) = terms.iter().find(|(_, v)| v.is_some()) {
                    return Err(ConfigError::invalid(
                        format!("{key}.{name}"),
                        "only allowed with model = \"affine\"",
                    ));
                }
                if spec.model == NoiseKind::None {
                    NoiseModel::none()
                } else {
                    let rows: Vec<CalibrationRow> = table.iter().map(CalibrationRow::from).collect();
                    calibrate_noise(&rows)
                        .map_err(|e| ConfigError::invalid(key, e))?
                        .model
                }
            }
            NoiseKind::Affine => {
                let get = |i: usize| {
                    terms[i]
                        .1
                        .ok_or_else(|| ConfigError::invalid(format!("{key}.{}", terms[i].0), "required for model = \"affine\""))
                };
                NoiseModel {
                    sigma_intercept: get(0)?,
                    sigma_slope: get(1)?,
                    bias_slope: get(2)?,
                    seed: 0,
                }
            }
        };
        model.validate().map_err(|e| ConfigError::invalid(key, e))?;
        Ok(model.with_seed(self.seed))
    }

    fn check_experiments(&self) -> Result<(), ConfigError> {
        for (i, e) in self.experiments.iter().enumerate() {
            let key = |field: &str| format!("experiment[{i}].{field}");
            match e {
                ExperimentConfig::Accuracy(AccuracyExperiment {
                    targets, repetitions, ..
                }) => {
                    if targets.is_empty() {
                        return Err(ConfigError::invalid(key("targets"), "at least one target is required"));
                    }
                    if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
                        return Err(ConfigError::invalid(key("targets"), format!("{t} is not finite")));
                    }
                    if *repetitions == 0 {
                        return Err(ConfigError::invalid(key("repetitions"), "must be at least 1"));
                    }
                }
                ExperimentConfig::Drift(DriftExperiment {
                    revolutions, epsilon, ..
                }) => {
                    if *revolutions == 0 {
                        return Err(ConfigError::invalid(key("revolutions"), "must be at least 1"));
                    }
                    if !(epsilon.abs() < diffdrive_core::drivetrain::MAX_MISMATCH) {
                        return Err(ConfigError::invalid(
                            key("epsilon"),
                            format!("|{epsilon}| must be below {}", diffdrive_core::drivetrain::MAX_MISMATCH),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Check everything and resolve the scenario into runnable parts.
    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        let sim = self.sim_config()?;
        self.check_experiments()?;
        Ok(Scenario {
            sim,
            insertion_noise: self.noise_model(Axis::Insertion)?,
            rotary_noise: self.noise_model(Axis::Rotary)?,
            experiments: self.experiments.clone(),
        })
    }
}
