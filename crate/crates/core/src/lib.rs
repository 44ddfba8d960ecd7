//! Kinematics, plant model, controllers and validation harness for a
//! two-nut screw/spline differential needle driver.
//!
//! Two motor-driven nuts share one grooved shaft. Turning the screw nut
//! relative to the spline nut advances the needle; turning both together
//! rotates it. This crate models the drive as a fixed-step plant with
//! quadrature encoder feedback and provides the mode-switching bang-bang
//! controller, a PID speed trim for pure rotation, and the experiment
//! harness used to check the drive against measured data.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod constants;
pub mod control;
pub mod drivetrain;
pub mod experiments;
pub mod kinematics;
pub mod sim;

pub use control::{Controller, ControllerConfig, ControllerMode, DisplayedPosition};
pub use drivetrain::{DriveState, Drivetrain};
pub use kinematics::{forward_kinematics, inverse_kinematics, NutAngles, ScrewSpec, ShaftPose};
pub use sim::{SimConfig, Simulator};
