//! Std side of the needle-driver simulator: scenario files, reports, the
//! `diffdrive` command line and the telemetry service.

pub mod cli;
pub mod config;
pub mod report;
pub mod scenario;
pub mod telemetry;
