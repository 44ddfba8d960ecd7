//! Wire messages. Every message is one JSON text frame carrying `version`.
//!
//! Server to client, tagged by `type`:
//!
//! * `telemetry` — a [`TelemetryFrame`]
//! * `ack` — an [`Ack`] for one command
//!
//! Client to server: a [`CommandMessage`]:
//!
//! ```json
//! {"version": 1, "request_id": "42", "kind": "SetSpeed",
//!  "value": {"motor": "insertion", "rpm": 60.0}}
//! ```

use diffdrive_core::control::ControllerMode;
use diffdrive_core::drivetrain::{Direction, MotorRole, MotorState};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeName {
    Normal,
    RotationEnabled,
}

impl From<ControllerMode> for ModeName {
    fn from(m: ControllerMode) -> Self {
        match m {
            ControllerMode::Normal => ModeName::Normal,
            ControllerMode::RotationEnabled => ModeName::RotationEnabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Cw,
    Ccw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorTelemetry {
    pub enabled: bool,
    pub direction: DirectionName,
    /// rpm
    pub commanded_speed: f64,
    /// rpm, signed
    pub actual_speed: f64,
}

impl From<&MotorState> for MotorTelemetry {
    fn from(m: &MotorState) -> Self {
        Self {
            enabled: m.enabled,
            direction: match m.direction {
                Direction::Cw => DirectionName::Cw,
                Direction::Ccw => DirectionName::Ccw,
            },
            commanded_speed: m.commanded_speed,
            actual_speed: m.actual_speed,
        }
    }
}

/// Snapshot of the simulator at the end of one control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub version: u32,
    /// Strictly increasing per service.
    pub sequence: u64,
    /// Simulated time, s.
    pub time: f64,
    /// mm
    pub insertion_display: f64,
    /// deg
    pub rotary_display: f64,
    pub mode: ModeName,
    pub estop: bool,
    /// mm
    pub insertion_target: f64,
    /// deg
    pub rotary_target: f64,
    pub insertion_motor: MotorTelemetry,
    pub rotary_motor: MotorTelemetry,
    pub ie_counts: i64,
    pub re_counts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotorName {
    Insertion,
    Rotary,
}

impl From<MotorName> for MotorRole {
    fn from(m: MotorName) -> Self {
        match m {
            MotorName::Insertion => MotorRole::Insertion,
            MotorName::Rotary => MotorRole::Rotary,
        }
    }
}

/// A validated command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    SetInsertionTarget { mm: f64 },
    SetRotaryTarget { deg: f64 },
    SetRotationEnable { enabled: bool },
    SetSpeed { motor: MotorName, rpm: f64 },
    /// `engaged: false` releases the latch.
    EStop { engaged: bool },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MmPayload {
    mm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DegPayload {
    deg: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnabledPayload {
    enabled: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeedPayload {
    motor: MotorName,
    rpm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EngagedPayload {
    engaged: bool,
}

/// A command as sent by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandMessage {
    pub version: u32,
    pub request_id: String,
    pub kind: String,
    #[serde(default)]
    pub value: Value,
}

impl CommandMessage {
    pub fn new(request_id: impl Into<String>, command: Command) -> Self {
        let (kind, value) = match command {
            Command::SetInsertionTarget { mm } => ("SetInsertionTarget", serde_json::json!({ "mm": mm })),
            Command::SetRotaryTarget { deg } => ("SetRotaryTarget", serde_json::json!({ "deg": deg })),
            Command::SetRotationEnable { enabled } => {
                ("SetRotationEnable", serde_json::json!({ "enabled": enabled }))
            }
            Command::SetSpeed { motor, rpm } => ("SetSpeed", serde_json::json!({ "motor": motor, "rpm": rpm })),
            Command::EStop { engaged } => ("EStop", serde_json::json!({ "engaged": engaged })),
        };
        Self {
            version: PROTOCOL_VERSION,
            request_id: request_id.into(),
            kind: kind.to_owned(),
            value,
        }
    }

    /// Check version, kind and payload units.
    pub fn command(&self) -> Result<Command, String> {
        if self.version != PROTOCOL_VERSION {
            return Err(format!(
                "unsupported protocol version {} (expected {PROTOCOL_VERSION})",
                self.version
            ));
        }
        fn payload<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T, String> {
            T::deserialize(v).map_err(|e| format!("malformed {kind} payload: {e}"))
        }
        fn finite(kind: &str, name: &str, x: f64) -> Result<f64, String> {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("{kind}: {name} must be finite"))
            }
        }
        let kind = self.kind.as_str();
        Ok(match kind {
            "SetInsertionTarget" => Command::SetInsertionTarget {
                mm: finite(kind, "mm", payload::<MmPayload>(kind, &self.value)?.mm)?,
            },
            "SetRotaryTarget" => Command::SetRotaryTarget {
                deg: finite(kind, "deg", payload::<DegPayload>(kind, &self.value)?.deg)?,
            },
            "SetRotationEnable" => Command::SetRotationEnable {
                enabled: payload::<EnabledPayload>(kind, &self.value)?.enabled,
            },
            "SetSpeed" => {
                let p: SpeedPayload = payload(kind, &self.value)?;
                Command::SetSpeed {
                    motor: p.motor,
                    rpm: finite(kind, "rpm", p.rpm)?,
                }
            }
            "EStop" => Command::EStop {
                engaged: payload::<EngagedPayload>(kind, &self.value)?.engaged,
            },
            other => return Err(format!("unknown command kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub version: u32,
    /// `None` only when the message was too malformed to carry one.
    pub request_id: Option<String>,
    pub status: AckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Ack {
    pub fn accepted(request_id: impl Into<String>) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            request_id: Some(request_id.into()),
            status: AckStatus::Accepted,
            reason: None,
        }
    }

    pub fn rejected(request_id: Option<String>, reason: impl Into<String>) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            request_id,
            status: AckStatus::Rejected,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Telemetry(TelemetryFrame),
    Ack(Ack),
}

/// Parse client text; a message that is not even a command object is
/// rejected with whatever `request_id` could be recovered.
pub fn parse_command(text: &str) -> Result<(String, Command), Ack> {
    let raw: Value = serde_json::from_str(text).map_err(|e| Ack::rejected(None, format!("invalid JSON: {e}")))?;
    let request_id = raw.get("request_id").and_then(Value::as_str).map(str::to_owned);
    let msg: CommandMessage = serde_json::from_value(raw)
        .map_err(|e| Ack::rejected(request_id.clone(), format!("malformed command: {e}")))?;
    let cmd = msg.command().map_err(|r| Ack::rejected(request_id, r))?;
    Ok((msg.request_id, cmd))
}
