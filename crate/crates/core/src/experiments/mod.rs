//! Validation campaign: pulley speed table, accuracy trials with a
//! calibrated measurement-noise model, and the long-rotation drift test.

mod noise;
mod stats;

use alloc::vec::Vec;
use core::fmt;

pub use noise::{calibrate_noise, Calibration, CalibrationError, CalibrationRow, NoiseError, NoiseModel};
pub use stats::{ExperimentStats, StatsError};

use crate::drivetrain::{transmission_output, TransmissionConfig, SLAVE_PULLEYS};
use crate::sim::{SimConfig, SimError, Simulator};

/// Simulated time allowed beyond the nominal travel time of a trial, seconds.
pub const TRIAL_TIME_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Targets in mm.
    Insertion,
    /// Targets in degrees.
    Rotary,
}

impl Axis {
    pub fn unit(self) -> &'static str {
        match self {
            Axis::Insertion => "mm",
            Axis::Rotary => "deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub axis: Axis,
    pub target: f64,
    pub repetitions: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    NoRepetitions,
    NoRevolutions,
    NonFiniteTarget(f64),
    Sim(SimError),
    Noise(NoiseError),
    Stats(StatsError),
    /// A trial never came to rest inside its deadband.
    NonConvergent { axis: Axis, target: f64, repetition: u32 },
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::NoRepetitions => write!(f, "at least one repetition is required"),
            ExperimentError::NoRevolutions => write!(f, "at least one revolution is required"),
            ExperimentError::NonFiniteTarget(t) => write!(f, "target {t} is not finite"),
            ExperimentError::Sim(e) => write!(f, "simulation failed: {e}"),
            ExperimentError::Noise(e) => write!(f, "invalid noise model: {e}"),
            ExperimentError::Stats(e) => write!(f, "statistics failed: {e}"),
            ExperimentError::NonConvergent {
                axis,
                target,
                repetition,
            } => write!(
                f,
                "{axis:?} trial {repetition} to {target} {} did not converge",
                axis.unit()
            ),
        }
    }
}

impl core::error::Error for ExperimentError {}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        ExperimentError::Sim(e)
    }
}

/// Axis speed at the configured motor speed, mm/s or deg/s.
pub fn axis_speed(axis: Axis, sim: &SimConfig) -> f64 {
    let train = &sim.drivetrain;
    match axis {
        Axis::Insertion => {
            let nut_rpm = transmission_output(sim.controller.insertion_speed, &train.screw_transmission);
            nut_rpm * train.screw.lead() / 60.0
        }
        Axis::Rotary => transmission_output(sim.controller.rotary_speed, &train.spline_transmission) * 6.0,
    }
}

fn stream_key(axis: Axis, target: f64) -> u64 {
    let tag = match axis {
        Axis::Insertion => 0x1,
        Axis::Rotary => 0x2,
    };
    target.to_bits() ^ (tag << 60)
}

/// Final true position of one closed-loop move from home.
fn closed_loop_move(axis: Axis, target: f64, sim: &SimConfig) -> Result<Option<f64>, SimError> {
    let mut s = Simulator::new(sim)?;
    match axis {
        Axis::Insertion => s.set_insertion_target(target),
        Axis::Rotary => {
            s.set_rotation_enable(true);
            s.set_rotary_target(target);
        }
    }
    let timeout = target.abs() / axis_speed(axis, sim) + TRIAL_TIME_MARGIN;
    match s.run_until_settled(timeout) {
        Ok(_) => {}
        Err(SimError::NotSettled { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    let pose = s.drive().pose;
    Ok(Some(match axis {
        Axis::Insertion => pose.insertion,
        Axis::Rotary => pose.rotation,
    }))
}

/// Drive to `spec.target` from home `spec.repetitions` times and measure
/// each final position with `noise`.
///
/// Rotary trials run with Rotation Enable on so the needle turns in place.
pub fn run_accuracy_trials(
    spec: &TrialSpec,
    noise: &NoiseModel,
    sim: &SimConfig,
) -> Result<ExperimentStats, ExperimentError> {
    if spec.repetitions == 0 {
        return Err(ExperimentError::NoRepetitions);
    }
    if !spec.target.is_finite() {
        return Err(ExperimentError::NonFiniteTarget(spec.target));
    }
    noise.validate().map_err(ExperimentError::Noise)?;

    let key = stream_key(spec.axis, spec.target);
    let mut samples = Vec::with_capacity(spec.repetitions as usize);
    for repetition in 0..spec.repetitions {
        let reached = closed_loop_move(spec.axis, spec.target, sim)?.ok_or(
            ExperimentError::NonConvergent {
                axis: spec.axis,
                target: spec.target,
                repetition,
            },
        )?;
        let mut rng = noise.trial_rng(key, u64::from(repetition));
        samples.push(reached + noise.sample_error(spec.target, &mut rng));
    }
    ExperimentStats::from_samples(spec.target, samples).map_err(ExperimentError::Stats)
}

/// Outcome of a long commanded pure rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftResult {
    /// degrees
    pub total_rotation: f64,
    /// mm
    pub insertion_drift: f64,
    /// mm per shaft revolution
    pub drift_per_rev: f64,
}

fn drift_run(revolutions: u32, epsilon: f64, sim: &SimConfig, pid: bool) -> Result<DriftResult, ExperimentError> {
    if revolutions == 0 {
        return Err(ExperimentError::NoRevolutions);
    }
    let mut cfg = *sim;
    cfg.mismatch = epsilon;
    cfg.controller.pid_enabled = pid;
    let mut s = Simulator::new(&cfg)?;
    let start = s.drive().pose;
    let target = f64::from(revolutions) * 360.0;
    s.set_rotation_enable(true);
    s.set_rotary_target(target);
    let timeout = target / axis_speed(Axis::Rotary, &cfg) + TRIAL_TIME_MARGIN;
    match s.run_until_settled(timeout) {
        Ok(_) => {}
        Err(SimError::NotSettled { .. }) => {
            return Err(ExperimentError::NonConvergent {
                axis: Axis::Rotary,
                target,
                repetition: 0,
            })
        }
        Err(e) => return Err(e.into()),
    }
    let moved = s.drive().pose - start;
    Ok(DriftResult {
        total_rotation: moved.rotation,
        insertion_drift: moved.insertion,
        drift_per_rev: moved.insertion / (moved.rotation / 360.0),
    })
}

/// Rotate `revolutions` turns in Rotation Enable mode with the insertion
/// motor running `1 + epsilon` times fast and no speed trim.
pub fn run_drift_experiment(
    revolutions: u32,
    epsilon: f64,
    sim: &SimConfig,
) -> Result<DriftResult, ExperimentError> {
    drift_run(revolutions, epsilon, sim, false)
}

/// Same as [`run_drift_experiment`] with the PID speed trim active.
pub fn run_compensated_drift_experiment(
    revolutions: u32,
    epsilon: f64,
    sim: &SimConfig,
) -> Result<DriftResult, ExperimentError> {
    drift_run(revolutions, epsilon, sim, true)
}

/// Nut speed for `motor_speed` through each configuration, rpm.
pub fn speed_table(motor_speed: f64, configs: &[TransmissionConfig]) -> Vec<f64> {
    configs
        .iter()
        .map(|cfg| transmission_output(motor_speed, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulleyRow {
    pub name: &'static str,
    pub config: TransmissionConfig,
    /// Nut speed at the rated motor speed, rpm.
    pub rated: f64,
    /// Nut speed at the real motor speed, rpm.
    pub real: f64,
}

/// Rated and real nut speeds for all five slave pulleys.
pub fn pulley_table(rated_motor_speed: f64, real_motor_speed: f64) -> Vec<PulleyRow> {
    let configs = TransmissionConfig::all_slave_pulleys();
    let rated = speed_table(rated_motor_speed, &configs);
    let real = speed_table(real_motor_speed, &configs);
    SLAVE_PULLEYS
        .iter()
        .zip(configs)
        .zip(rated.into_iter().zip(real))
        .map(|((&(name, _), config), (rated, real))| PulleyRow {
            name,
            config,
            rated,
            real,
        })
        .collect()
}
