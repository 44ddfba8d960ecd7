//! Discrete-time model of the side-pulley differential drive.

mod encoder;
mod motor;
mod plant;
mod transmission;

pub use encoder::{
    encoder_sample, EncoderMount, EncoderRole, EncoderSpec, EncoderSpecError, EncoderState,
    Quadrature,
};
pub use motor::{
    Direction, MotorCommand, MotorRole, MotorSpec, MotorSpecError, MotorState,
    DEG_PER_SEC_PER_RPM,
};
pub use plant::{
    apply_speed_mismatch, DriveState, Drivetrain, PlantError, StrokeLimits, DEFAULT_DT, MAX_DT,
    MAX_MISMATCH,
};
pub use transmission::{
    transmission_output, TransmissionConfig, TransmissionError, MASTER_TEETH, SLAVE_PULLEYS,
};
