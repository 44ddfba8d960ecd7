//! Live telemetry and command service for a running simulator.

mod host;
pub mod protocol;
mod server;

pub use host::{HostOptions, Subscription, SubscriptionEnd, TelemetryHost, DEFAULT_BUFFER, DEFAULT_FRAME_RATE_HZ};
pub use server::{router, serve, DriveInfo, ScrewInfo, StateResponse};
