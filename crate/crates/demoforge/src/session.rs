//! One session: a live simulation or a recording in playback, its active
//! interactions and an optional recording in progress.
//!
//! The session runs on a synthetic clock that advances one tick period per
//! [`Session::tick`], so recorded wall times are reproducible.

use std::collections::BTreeMap;
use std::sync::Arc;

use demoforge_core::md::{
    build_system_at, InteractiveForce, MdError, Simulation, TaskId, Thermostat,
};
use serde_json::json;

use crate::config::ServerConfig;
use crate::protocol::{
    codes, AtomRef, ClientMessage, FrameMsg, ServerMessage, SessionMode, TopologyMsg,
};
use crate::recording::{
    Frame, Header, Player, Recording, RecordingError, ReplayItem, SharedStateEvent,
};

/// What a handled message produces: replies for the sender and messages for every subscriber.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub reply: Vec<ServerMessage>,
    pub broadcast: Vec<ServerMessage>,
}

impl Outcome {
    fn reply(msg: ServerMessage) -> Self {
        Outcome {
            reply: vec![msg],
            broadcast: vec![],
        }
    }

    fn broadcast(msgs: Vec<ServerMessage>) -> Self {
        Outcome {
            reply: vec![],
            broadcast: msgs,
        }
    }
}

enum Mode {
    Live {
        sim: Box<Simulation>,
        thermostat: Thermostat,
        running: bool,
    },
    Playback {
        player: Player,
        played_ms: f64,
        base_ms: u64,
        finished_sent: bool,
    },
}

struct ActiveRecording {
    path: String,
    rec: Recording,
}

pub struct Session {
    id: String,
    task: TaskId,
    cfg: ServerConfig,
    dt: f64,
    mode: Mode,
    interactions: BTreeMap<String, InteractiveForce>,
    recording: Option<ActiveRecording>,
    ticks: u64,
}

impl Session {
    pub fn new(
        id: &str,
        task: TaskId,
        cfg: ServerConfig,
        dt: f64,
        temperature: f64,
        gamma: f64,
    ) -> Result<Self, MdError> {
        let (topology, state) = build_system_at(task, cfg.seed, temperature)?;
        let sim = Simulation::new(topology, state)?;
        let thermostat = if cfg.thermostat {
            Thermostat::Langevin {
                gamma,
                temperature,
                seed: cfg.seed,
            }
        } else {
            Thermostat::None
        };
        Ok(Session {
            id: id.into(),
            task,
            cfg,
            dt,
            mode: Mode::Live {
                sim: Box::new(sim),
                thermostat,
                running: true,
            },
            interactions: BTreeMap::new(),
            recording: None,
            ticks: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> SessionMode {
        match self.mode {
            Mode::Live { .. } => SessionMode::Live,
            Mode::Playback { .. } => SessionMode::Playback,
        }
    }

    pub fn tick_ms(&self) -> f64 {
        1000.0 / self.cfg.tick_hz
    }

    /// Session clock in milliseconds.
    pub fn clock_ms(&self) -> u64 {
        (self.ticks as f64 * self.tick_ms()).round() as u64
    }

    pub fn interaction_ids(&self) -> Vec<String> {
        self.interactions.keys().cloned().collect()
    }

    pub fn simulation(&self) -> Option<&Simulation> {
        match &self.mode {
            Mode::Live { sim, .. } => Some(sim),
            Mode::Playback { .. } => None,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording.is_some()
    }

    fn topology_msg(&self) -> ServerMessage {
        let (task, topo) = match &self.mode {
            Mode::Live { sim, .. } => (self.task, sim.topology()),
            Mode::Playback { player, .. } => (
                player.recording().header.task,
                &player.recording().header.topology,
            ),
        };
        ServerMessage::Topology(TopologyMsg::new(task.as_str(), topo))
    }

    /// Messages a new subscriber receives before any frame.
    pub fn greeting(&self) -> Vec<ServerMessage> {
        let mut out = vec![
            ServerMessage::Hello {
                session: self.id.clone(),
                mode: self.mode(),
            },
            self.topology_msg(),
        ];
        if let Some(s) = self.playback_status() {
            out.push(s);
        }
        out
    }

    fn playback_status(&self) -> Option<ServerMessage> {
        match &self.mode {
            Mode::Playback { player, .. } => Some(ServerMessage::Playback {
                playing: !player.is_paused(),
                finished: player.is_finished(),
                position: player.position(),
                length: player.len(),
            }),
            Mode::Live { .. } => None,
        }
    }

    fn current_frame(&self) -> Option<Frame> {
        let Mode::Live { sim, .. } = &self.mode else {
            return None;
        };
        let s = sim.state();
        Some(Frame {
            step: s.step,
            sim_time: s.time,
            wall_time_ms: self.clock_ms(),
            positions: s.positions.clone(),
            user_forces: sim.user_forces().to_vec(),
            potential: sim.potential(),
            kinetic: sim.kinetic(),
        })
    }

    fn log_event(&mut self, key: &str, value: serde_json::Value) {
        let wall_time_ms = self.clock_ms();
        if let Some(r) = &mut self.recording {
            // the session clock never runs backwards, so this cannot fail
            let _ = r.rec.append_event(SharedStateEvent {
                wall_time_ms,
                key: key.into(),
                value,
            });
        }
    }

    fn sync_interactions(&mut self) -> Result<(), MdError> {
        let list: Vec<InteractiveForce> = self.interactions.values().cloned().collect();
        match &mut self.mode {
            Mode::Live { sim, .. } => sim.set_interactions(list),
            Mode::Playback { .. } => Ok(()),
        }
    }

    fn resolve_atoms(&self, atoms: &[AtomRef]) -> Result<Vec<usize>, String> {
        let Mode::Live { sim, .. } = &self.mode else {
            return Err("no live simulation".into());
        };
        let topo = sim.topology();
        atoms
            .iter()
            .map(|a| match a {
                AtomRef::Index(i) if *i < topo.n_atoms() => Ok(*i),
                AtomRef::Index(i) => Err(format!("atom index {i} out of range")),
                AtomRef::Name(n) => topo
                    .atom_index(n)
                    .ok_or_else(|| format!("no atom named `{n}`")),
            })
            .collect()
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Outcome {
        let playback = matches!(self.mode, Mode::Playback { .. });
        match msg {
            ClientMessage::Hello {} => Outcome {
                reply: self.greeting(),
                broadcast: vec![],
            },
            ClientMessage::InteractionStart { .. }
            | ClientMessage::InteractionUpdate { .. }
            | ClientMessage::InteractionEnd { .. }
                if playback =>
            {
                Outcome::reply(ServerMessage::error(
                    codes::PLAYBACK_READONLY,
                    "playback sessions accept no interactions",
                ))
            }
            ClientMessage::InteractionStart {
                id,
                atoms,
                mode,
                scale,
                position,
                width,
                depth,
            } => {
                if self.interactions.contains_key(&id) {
                    return Outcome::reply(ServerMessage::error(
                        codes::DUPLICATE_INTERACTION,
                        format!("`{id}` is active"),
                    ));
                }
                let atoms = match self.resolve_atoms(&atoms) {
                    Ok(a) => a,
                    Err(e) => {
                        return Outcome::reply(ServerMessage::error(codes::INVALID_INTERACTION, e))
                    }
                };
                let it = InteractiveForce {
                    id: id.clone(),
                    atoms,
                    controller: position,
                    scale,
                    mode: mode.to_mode(width, depth),
                };
                if let Err(e) = it.validate(usize::MAX) {
                    return Outcome::reply(ServerMessage::error(
                        codes::INVALID_INTERACTION,
                        e.to_string(),
                    ));
                }
                let logged = serde_json::to_value(&it).unwrap_or_default();
                self.interactions.insert(id.clone(), it);
                if let Err(e) = self.sync_interactions() {
                    self.interactions.remove(&id);
                    let _ = self.sync_interactions();
                    return Outcome::reply(ServerMessage::error(
                        codes::INVALID_INTERACTION,
                        e.to_string(),
                    ));
                }
                self.log_event("interaction/start", logged);
                Outcome::default()
            }
            ClientMessage::InteractionUpdate {
                id,
                position,
                scale,
            } => {
                let Some(it) = self.interactions.get(&id) else {
                    return Outcome::reply(ServerMessage::error(
                        codes::UNKNOWN_INTERACTION,
                        format!("no interaction `{id}`"),
                    ));
                };
                let previous = it.clone();
                let mut next = previous.clone();
                if let Some(p) = position {
                    next.controller = p;
                }
                if let Some(s) = scale {
                    next.scale = s;
                }
                self.interactions.insert(id.clone(), next);
                if let Err(e) = self.sync_interactions() {
                    self.interactions.insert(id, previous);
                    let _ = self.sync_interactions();
                    return Outcome::reply(ServerMessage::error(
                        codes::INVALID_INTERACTION,
                        e.to_string(),
                    ));
                }
                self.log_event(
                    "interaction/update",
                    json!({ "id": id, "position": position, "scale": scale }),
                );
                Outcome::default()
            }
            ClientMessage::InteractionEnd { id } => {
                if self.interactions.remove(&id).is_none() {
                    return Outcome::reply(ServerMessage::error(
                        codes::UNKNOWN_INTERACTION,
                        format!("no interaction `{id}`"),
                    ));
                }
                // removing an interaction cannot make the remaining set invalid
                let _ = self.sync_interactions();
                self.log_event("interaction/end", json!({ "id": id }));
                Outcome::default()
            }
            ClientMessage::Play {} | ClientMessage::Pause {} => {
                let play = matches!(msg, ClientMessage::Play {});
                match &mut self.mode {
                    Mode::Live { running, .. } => {
                        *running = play;
                        Outcome::default()
                    }
                    Mode::Playback {
                        player,
                        finished_sent,
                        ..
                    } => {
                        if play {
                            player.play();
                            *finished_sent = false;
                        } else {
                            player.pause();
                        }
                        Outcome::broadcast(self.playback_status().into_iter().collect())
                    }
                }
            }
            ClientMessage::Restart {} | ClientMessage::Seek { .. } => {
                let Mode::Playback {
                    player,
                    played_ms,
                    base_ms,
                    finished_sent,
                } = &mut self.mode
                else {
                    return Outcome::reply(ServerMessage::error(
                        codes::NOT_PLAYBACK,
                        "only playback sessions restart or seek",
                    ));
                };
                match msg {
                    ClientMessage::Seek { step } => {
                        if let Err(e) = player.seek(step) {
                            return Outcome::reply(ServerMessage::error(
                                codes::SEEK_RANGE,
                                e.to_string(),
                            ));
                        }
                    }
                    _ => player.restart(),
                }
                *base_ms = player.peek().map(|i| i.wall_time_ms()).unwrap_or(0);
                *played_ms = 0.0;
                *finished_sent = false;
                Outcome::broadcast(self.playback_status().into_iter().collect())
            }
            ClientMessage::RecordStart { path } => {
                if playback {
                    return Outcome::reply(ServerMessage::error(
                        codes::PLAYBACK_READONLY,
                        "cannot record during playback",
                    ));
                }
                if self.recording.is_some() {
                    return Outcome::reply(ServerMessage::error(
                        codes::RECORDING,
                        "already recording",
                    ));
                }
                let Mode::Live { sim, .. } = &self.mode else {
                    unreachable!()
                };
                let mut header =
                    Header::new(self.task, sim.topology().clone(), self.dt, self.cfg.seed);
                header.frame_interval = self.cfg.steps_per_tick * self.cfg.frame_every;
                header.created_unix_ms = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0);
                let mut rec = Recording::new(header);
                if let Some(f) = self.current_frame() {
                    let _ = rec.append_frame(f);
                }
                self.recording = Some(ActiveRecording { path, rec });
                // interactions already held are part of the recorded state
                for it in self.interactions.values().cloned().collect::<Vec<_>>() {
                    self.log_event(
                        "interaction/start",
                        serde_json::to_value(&it).unwrap_or_default(),
                    );
                }
                Outcome::default()
            }
            ClientMessage::RecordStop {} => match self.recording.take() {
                None => Outcome::reply(ServerMessage::error(codes::RECORDING, "not recording")),
                Some(ActiveRecording { path, rec }) => match rec.write_file(&path) {
                    Ok(bytes) => Outcome::reply(ServerMessage::RecordingSaved {
                        path,
                        frames: rec.frames().len(),
                        events: rec.events().len(),
                        bytes,
                    }),
                    Err(e) => Outcome::reply(ServerMessage::error(codes::RECORDING, e.to_string())),
                },
            },
            ClientMessage::LoadRecording { path, speed } => {
                if !(speed > 0.0 && speed.is_finite()) {
                    return Outcome::reply(ServerMessage::error(
                        codes::BAD_MESSAGE,
                        "speed must be positive",
                    ));
                }
                match Recording::read_file(&path) {
                    Ok(rec) => {
                        self.load(Arc::new(rec), speed);
                        Outcome::broadcast(self.greeting())
                    }
                    Err(e) => Outcome::reply(ServerMessage::error(codes::RECORDING, e.to_string())),
                }
            }
            ClientMessage::SharedState { key, value } => {
                self.log_event(&key, value.clone());
                let wall_time_ms = self.clock_ms();
                Outcome::broadcast(vec![ServerMessage::SharedState {
                    wall_time_ms,
                    key,
                    value,
                }])
            }
        }
    }

    /// Switches to paused playback of `rec`; active interactions and any recording in progress are dropped.
    pub fn load(&mut self, rec: Arc<Recording>, speed: f64) {
        self.interactions.clear();
        self.recording = None;
        let base_ms = rec
            .frames()
            .first()
            .map(|f| f.wall_time_ms)
            .unwrap_or(0)
            .min(
                rec.events()
                    .first()
                    .map(|e| e.wall_time_ms)
                    .unwrap_or(u64::MAX),
            );
        self.mode = Mode::Playback {
            player: Player::new(rec, speed),
            played_ms: 0.0,
            base_ms,
            finished_sent: false,
        };
    }

    /// Advances one tick and returns what to broadcast.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        self.ticks += 1;
        let tick_ms = self.tick_ms();
        match &mut self.mode {
            Mode::Live {
                sim,
                thermostat,
                running,
            } => {
                if !*running {
                    return vec![];
                }
                for _ in 0..self.cfg.steps_per_tick {
                    if let Err(e) = sim.step(self.dt, *thermostat) {
                        *running = false;
                        return vec![ServerMessage::error("simulation_error", e.to_string())];
                    }
                }
                if !self.ticks.is_multiple_of(self.cfg.frame_every) {
                    return vec![];
                }
                let frame = self.current_frame().expect("live session");
                let msg = ServerMessage::Frame(FrameMsg::from(&frame));
                if let Some(r) = &mut self.recording {
                    if let Err(e) = r.rec.append_frame(frame) {
                        return vec![msg, ServerMessage::error(codes::RECORDING, e.to_string())];
                    }
                }
                vec![msg]
            }
            Mode::Playback {
                player,
                played_ms,
                base_ms,
                finished_sent,
            } => {
                let mut out = vec![];
                if player.is_paused() {
                    return out;
                }
                *played_ms += tick_ms * player.speed();
                while let Some(item) = player.peek() {
                    if item.wall_time_ms().saturating_sub(*base_ms) as f64 > *played_ms {
                        break;
                    }
                    player.advance();
                    out.push(match item {
                        ReplayItem::Frame(f) => ServerMessage::Frame(FrameMsg::from(&f)),
                        ReplayItem::Event(e) => ServerMessage::SharedState {
                            wall_time_ms: e.wall_time_ms,
                            key: e.key,
                            value: e.value,
                        },
                    });
                }
                if player.is_finished() && !*finished_sent {
                    *finished_sent = true;
                    player.pause();
                    out.extend(self.playback_status());
                }
                out
            }
        }
    }
}

impl From<RecordingError> for ServerMessage {
    fn from(e: RecordingError) -> Self {
        ServerMessage::error(codes::RECORDING, e.to_string())
    }
}
