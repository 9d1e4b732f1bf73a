//! Wire format of the teleoperation session: one JSON object per text frame,
//! `{"type": ..., "seq": ..., "payload": ...}`.

use crate::mission::{AbortReason, MissionEvent, MissionPhase};
use crate::mixer::RcChannels;
use crate::telemetry::TelemetryRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("invalid {kind} payload: {message}")]
    Payload { kind: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pilot,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Set by the server in its reply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pause {
    pub paused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    PhaseTransition {
        t_s: f64,
        from: MissionPhase,
        to: MissionPhase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        abort_reason: Option<AbortReason>,
    },
    /// A command channel arrived out of range; `value` is absent for NaN.
    ClampWarning {
        channel: String,
        value: Option<f64>,
    },
    Failsafe {
        reason: String,
    },
    ProtocolError {
        message: String,
    },
    Grasp {
        object: usize,
        held: bool,
    },
    /// Client request to fire a mission event (takeoff, abort).
    Mission {
        event: MissionEvent,
    },
    Reset,
    Paused {
        paused: bool,
    },
    Fault {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello(Hello),
    Cmd(RcChannels),
    Telemetry(TelemetryRecord),
    Event(Event),
    Reset,
    Pause(Pause),
}

impl Message {
    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Hello(_) => "hello",
            Message::Cmd(_) => "cmd",
            Message::Telemetry(_) => "telemetry",
            Message::Event(_) => "event",
            Message::Reset => "reset",
            Message::Pause(_) => "pause",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub seq: u64,
    pub message: Message,
}

#[derive(Serialize)]
struct OutFrame<'a, T: Serialize> {
    #[serde(rename = "type")]
    kind: &'a str,
    seq: u64,
    payload: &'a T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InFrame {
    #[serde(rename = "type")]
    kind: String,
    seq: u64,
    #[serde(default)]
    payload: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

pub fn encode(frame: &Frame) -> String {
    fn out<T: Serialize>(kind: &str, seq: u64, payload: &T) -> String {
        serde_json::to_string(&OutFrame { kind, seq, payload }).expect("frame serialises")
    }
    let kind = frame.message.type_name();
    let seq = frame.seq;
    match &frame.message {
        Message::Hello(p) => out(kind, seq, p),
        Message::Cmd(p) => out(kind, seq, p),
        Message::Telemetry(p) => out(kind, seq, p),
        Message::Event(p) => out(kind, seq, p),
        Message::Reset => out(kind, seq, &Empty {}),
        Message::Pause(p) => out(kind, seq, p),
    }
}

pub fn decode(text: &str) -> Result<Frame, ProtocolError> {
    let raw: InFrame =
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    fn payload<T: for<'de> Deserialize<'de>>(
        kind: &str,
        v: serde_json::Value,
    ) -> Result<T, ProtocolError> {
        // A missing payload reads as an empty object.
        let v = match v {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v @ serde_json::Value::Object(_) => v,
            _ => {
                return Err(ProtocolError::Payload {
                    kind: kind.to_string(),
                    message: "payload must be an object".into(),
                })
            }
        };
        serde_json::from_value(v).map_err(|e| ProtocolError::Payload {
            kind: kind.to_string(),
            message: e.to_string(),
        })
    }
    let k = raw.kind.as_str();
    let message = match k {
        "hello" => Message::Hello(payload(k, raw.payload)?),
        "cmd" => Message::Cmd(payload(k, raw.payload)?),
        "telemetry" => Message::Telemetry(payload(k, raw.payload)?),
        "event" => Message::Event(payload(k, raw.payload)?),
        "reset" => {
            payload::<Empty>(k, raw.payload)?;
            Message::Reset
        }
        "pause" => Message::Pause(payload(k, raw.payload)?),
        other => return Err(ProtocolError::UnknownType(other.to_string())),
    };
    Ok(Frame {
        seq: raw.seq,
        message,
    })
}
