//! JSON messages spoken over `/session/{id}`.
//!
//! Every message is an object with `version` and `type` fields plus the
//! type's payload. Positions and forces travel as flat arrays
//! `[x0, y0, z0, x1, ...]` in nm and kJ/mol/nm.

use demoforge_core::md::{InteractionMode, Topology};
use demoforge_core::Vec3;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::recording::Frame;

pub const PROTOCOL_VERSION: u32 = 1;

pub mod codes {
    pub const BAD_MESSAGE: &str = "bad_message";
    pub const UNSUPPORTED_VERSION: &str = "unsupported_version";
    pub const PLAYBACK_READONLY: &str = "playback_readonly";
    pub const UNKNOWN_INTERACTION: &str = "unknown_interaction";
    pub const DUPLICATE_INTERACTION: &str = "duplicate_interaction";
    pub const INVALID_INTERACTION: &str = "invalid_interaction";
    pub const NOT_PLAYBACK: &str = "not_playback";
    pub const SEEK_RANGE: &str = "seek_range";
    pub const RECORDING: &str = "recording_error";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    GaussianWell,
    ConstantPull,
}

/// Messages a client may send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {},
    InteractionStart {
        id: String,
        atoms: Vec<AtomRef>,
        #[serde(default = "default_mode")]
        mode: ModeName,
        scale: f64,
        position: Vec3,
        /// Gaussian-well width (nm) and depth (kJ/mol); defaults 0.3 and 100.
        #[serde(default)]
        width: Option<f64>,
        #[serde(default)]
        depth: Option<f64>,
    },
    InteractionUpdate {
        id: String,
        #[serde(default)]
        position: Option<Vec3>,
        #[serde(default)]
        scale: Option<f64>,
    },
    InteractionEnd {
        id: String,
    },
    Play {},
    Pause {},
    Restart {},
    Seek {
        step: u64,
    },
    RecordStart {
        path: String,
    },
    RecordStop {},
    /// Switches the session to playback of a `.mdil` file on the server.
    LoadRecording {
        path: String,
        #[serde(default = "default_speed")]
        speed: f64,
    },
    /// Client-side shared state (avatar pose, labels); logged when recording.
    SharedState {
        key: String,
        value: Value,
    },
}

fn default_mode() -> ModeName {
    ModeName::GaussianWell
}

fn default_speed() -> f64 {
    1.0
}

impl ModeName {
    pub fn to_mode(self, width: Option<f64>, depth: Option<f64>) -> InteractionMode {
        match self {
            ModeName::ConstantPull => InteractionMode::ConstantPull,
            ModeName::GaussianWell => {
                let InteractionMode::GaussianWell {
                    width: w0,
                    depth: d0,
                } = InteractionMode::gaussian_well()
                else {
                    unreachable!()
                };
                InteractionMode::GaussianWell {
                    width: width.unwrap_or(w0),
                    depth: depth.unwrap_or(d0),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyMsg {
    pub task: String,
    pub atom_names: Vec<String>,
    pub masses: Vec<f64>,
    pub bonds: Vec<[usize; 2]>,
}

impl TopologyMsg {
    pub fn new(task: &str, t: &Topology) -> Self {
        TopologyMsg {
            task: task.into(),
            atom_names: t.atom_names.clone(),
            masses: t.masses.clone(),
            bonds: t.bonds.iter().map(|b| [b.i, b.j]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMsg {
    pub step: u64,
    pub sim_time: f64,
    pub positions: Vec<f64>,
    pub user_forces: Vec<f64>,
    pub potential: f64,
    pub kinetic: f64,
}

pub fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|x| x.iter().copied()).collect()
}

pub fn unflatten(v: &[f64]) -> Vec<Vec3> {
    v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

impl From<&Frame> for FrameMsg {
    fn from(f: &Frame) -> Self {
        FrameMsg {
            step: f.step,
            sim_time: f.sim_time,
            positions: flatten(&f.positions),
            user_forces: flatten(&f.user_forces),
            potential: f.potential,
            kinetic: f.kinetic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Live,
    Playback,
}

/// Messages the server sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        session: String,
        mode: SessionMode,
    },
    Topology(TopologyMsg),
    Frame(FrameMsg),
    SharedState {
        wall_time_ms: u64,
        key: String,
        value: Value,
    },
    /// Playback state after a control message or when playback ends.
    Playback {
        playing: bool,
        finished: bool,
        position: usize,
        length: usize,
    },
    RecordingSaved {
        path: String,
        frames: usize,
        events: usize,
        bytes: u64,
    },
    Error {
        code: String,
        detail: String,
    },
}

impl ServerMessage {
    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        ServerMessage::Error {
            code: code.into(),
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("server messages serialize");
        v["version"] = PROTOCOL_VERSION.into();
        v.to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Parses a client message, checking the protocol version.
pub fn parse_client(text: &str) -> Result<ClientMessage, ServerMessage> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(codes::BAD_MESSAGE, format!("invalid JSON: {e}")))?;
    match v.get("version").and_then(Value::as_u64) {
        None => {
            return Err(ServerMessage::error(
                codes::BAD_MESSAGE,
                "missing numeric `version` field",
            ))
        }
        Some(x) if x != PROTOCOL_VERSION as u64 => {
            return Err(ServerMessage::error(
                codes::UNSUPPORTED_VERSION,
                format!("protocol version {x} is not supported"),
            ))
        }
        Some(_) => {}
    }
    serde_json::from_value(v).map_err(|e| ServerMessage::error(codes::BAD_MESSAGE, e.to_string()))
}

impl ClientMessage {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("client messages serialize");
        v["version"] = PROTOCOL_VERSION.into();
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_messages_parse() {
        let m = parse_client(
            r#"{"version":1,"type":"interaction_start","id":"a","atoms":["C61",3],"scale":100,"position":[1,2,3]}"#,
        )
        .unwrap();
        assert_eq!(
            m,
            ClientMessage::InteractionStart {
                id: "a".into(),
                atoms: vec![AtomRef::Name("C61".into()), AtomRef::Index(3)],
                mode: ModeName::GaussianWell,
                scale: 100.0,
                position: [1.0, 2.0, 3.0],
                width: None,
                depth: None,
            }
        );
        assert_eq!(
            parse_client(r#"{"version":1,"type":"play"}"#).unwrap(),
            ClientMessage::Play {}
        );
        assert_eq!(parse_client(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn malformed_messages_are_bad_message() {
        for text in [
            "{",
            r#"{"type":"play"}"#,
            r#"{"version":1,"type":"fly"}"#,
            r#"{"version":1,"type":"seek"}"#,
        ] {
            match parse_client(text) {
                Err(ServerMessage::Error { code, .. }) => {
                    assert_eq!(code, codes::BAD_MESSAGE, "{text}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
        match parse_client(r#"{"version":7,"type":"play"}"#) {
            Err(ServerMessage::Error { code, .. }) => assert_eq!(code, codes::UNSUPPORTED_VERSION),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn server_messages_carry_version() {
        let text = ServerMessage::error(codes::UNKNOWN_INTERACTION, "x").to_json();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["type"], "error");
        assert_eq!(v["code"], "unknown_interaction");
        assert_eq!(
            ServerMessage::from_json(&text).unwrap(),
            ServerMessage::error(codes::UNKNOWN_INTERACTION, "x")
        );
    }
}
