//! Frames plus shared-state events, the `.mdil` container and replay.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! "MDIL" | version u32 | header_len u64 | header JSON
//! repeated: tag u8 (0 frame, 1 event) | payload_len u32 | payload
//! frame payload: step u64, sim_time f64, wall_time_ms u64, potential f64,
//!                kinetic f64, n_atoms u32, positions 3n f64, user_forces 3n f64
//! event payload: wall_time_ms u64, key_len u32, key, value_len u32, value JSON
//! ```

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use demoforge_core::env::{FrameSink, FrameSnapshot};
use demoforge_core::md::{TaskId, Topology};
use demoforge_core::Vec3;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"MDIL";
pub const FORMAT_VERSION: u32 = 1;
/// Default frame subsampling: record every k-th integrator step.
pub const DEFAULT_FRAME_INTERVAL: u64 = 10;

const TAG_FRAME: u8 = 0;
const TAG_EVENT: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RecordingError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an .mdil file: {0}")]
    Format(String),
    #[error("corrupt recording at byte {offset}: {detail}")]
    Corrupt { offset: u64, detail: String },
    #[error("frame step {step} comes after step {last}")]
    StepOrder { last: u64, step: u64 },
    #[error("event wall time {wall_time_ms} ms comes after {last} ms")]
    EventOrder { last: u64, wall_time_ms: u64 },
    #[error("frame has {got} atoms, topology has {expected}")]
    AtomCount { expected: usize, got: usize },
    #[error("recording has no frames")]
    Empty,
    #[error("no atom named `{0}`")]
    UnknownAtom(String),
    #[error("step {step} is past the last frame (step {last})")]
    SeekRange { step: u64, last: u64 },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u64,
    /// ps
    pub sim_time: f64,
    /// Milliseconds on the session clock; used to merge frames with events.
    pub wall_time_ms: u64,
    pub positions: Vec<Vec3>,
    pub user_forces: Vec<Vec3>,
    pub potential: f64,
    pub kinetic: f64,
}

impl Frame {
    pub fn from_snapshot(s: FrameSnapshot, wall_time_ms: u64) -> Self {
        Frame {
            step: s.step,
            sim_time: s.sim_time,
            wall_time_ms,
            positions: s.positions,
            user_forces: s.user_forces,
            potential: s.potential,
            kinetic: s.kinetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedStateEvent {
    pub wall_time_ms: u64,
    /// Slash-separated path, e.g. `interaction/start` or `avatar/pose`.
    pub key: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub task: TaskId,
    pub topology: Topology,
    /// ps per integrator step
    pub dt: f64,
    /// Every k-th integrator step is recorded.
    pub frame_interval: u64,
    /// Unix milliseconds when the recording was started.
    pub created_unix_ms: u64,
    pub seed: u64,
}

impl Header {
    pub fn new(task: TaskId, topology: Topology, dt: f64, seed: u64) -> Self {
        Header {
            version: FORMAT_VERSION,
            task,
            topology,
            dt,
            frame_interval: DEFAULT_FRAME_INTERVAL,
            created_unix_ms: 0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub header: Header,
    frames: Vec<Frame>,
    events: Vec<SharedStateEvent>,
}

impl Recording {
    pub fn new(header: Header) -> Self {
        Recording {
            header,
            frames: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn events(&self) -> &[SharedStateEvent] {
        &self.events
    }

    pub fn n_atoms(&self) -> usize {
        self.header.topology.n_atoms()
    }

    pub fn append_frame(&mut self, frame: Frame) -> Result<(), RecordingError> {
        if let Some(last) = self.frames.last() {
            if frame.step < last.step {
                return Err(RecordingError::StepOrder {
                    last: last.step,
                    step: frame.step,
                });
            }
        }
        let n = self.n_atoms();
        for len in [frame.positions.len(), frame.user_forces.len()] {
            if len != n {
                return Err(RecordingError::AtomCount {
                    expected: n,
                    got: len,
                });
            }
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn append_event(&mut self, event: SharedStateEvent) -> Result<(), RecordingError> {
        if let Some(last) = self.events.last() {
            if event.wall_time_ms < last.wall_time_ms {
                return Err(RecordingError::EventOrder {
                    last: last.wall_time_ms,
                    wall_time_ms: event.wall_time_ms,
                });
            }
        }
        self.events.push(event);
        Ok(())
    }

    /// Positions of one atom, one entry per frame.
    pub fn atom_trajectory(&self, atom: &str) -> Result<Vec<(u64, Vec3)>, RecordingError> {
        let i = self
            .header
            .topology
            .atom_index(atom)
            .ok_or_else(|| RecordingError::UnknownAtom(atom.to_string()))?;
        Ok(self
            .frames
            .iter()
            .map(|f| (f.step, f.positions[i]))
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<u64, RecordingError> {
        let header =
            serde_json::to_vec(&self.header).map_err(|e| RecordingError::Format(e.to_string()))?;
        let mut buf = Vec::with_capacity(16 + header.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(&header);
        w.write_all(&buf)?;
        let mut total = buf.len() as u64;
        let mut payload = Vec::new();
        for item in merged_order(self) {
            payload.clear();
            let tag = match item {
                ItemRef::Frame(k) => {
                    encode_frame(&self.frames[k], &mut payload);
                    TAG_FRAME
                }
                ItemRef::Event(k) => {
                    encode_event(&self.events[k], &mut payload)?;
                    TAG_EVENT
                }
            };
            w.write_all(&[tag])?;
            w.write_all(&(payload.len() as u32).to_le_bytes())?;
            w.write_all(&payload)?;
            total += 5 + payload.len() as u64;
        }
        w.flush()?;
        Ok(total)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<u64, RecordingError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, RecordingError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, RecordingError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RecordingError> {
        let mut c = Cursor { bytes, pos: 0 };
        let magic = c.take(4, "magic")?;
        if magic != MAGIC {
            return Err(RecordingError::Format(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = c.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(RecordingError::Format(format!(
                "unsupported version {version}"
            )));
        }
        let header_len = c.u64("header length")?;
        let header_start = c.pos;
        let header_bytes = c.take(header_len as usize, "header")?;
        let header: Header =
            serde_json::from_slice(header_bytes).map_err(|e| RecordingError::Corrupt {
                offset: header_start as u64,
                detail: format!("header: {e}"),
            })?;
        let mut rec = Recording::new(header);
        while c.pos < bytes.len() {
            let record_start = c.pos as u64;
            let tag = c.take(1, "record tag")?[0];
            let len = c.u32("record length")? as usize;
            let payload_start = c.pos;
            let payload = c.take(len, "record payload")?;
            let mut p = Cursor {
                bytes: payload,
                pos: 0,
            };
            let corrupt = |e: RecordingError| match e {
                RecordingError::Corrupt { offset, detail } => RecordingError::Corrupt {
                    offset: payload_start as u64 + offset,
                    detail,
                },
                other => other,
            };
            match tag {
                TAG_FRAME => {
                    let frame = decode_frame(&mut p).map_err(corrupt)?;
                    rec.append_frame(frame)
                        .map_err(|e| RecordingError::Corrupt {
                            offset: record_start,
                            detail: e.to_string(),
                        })?;
                }
                TAG_EVENT => {
                    let event = decode_event(&mut p).map_err(corrupt)?;
                    rec.append_event(event)
                        .map_err(|e| RecordingError::Corrupt {
                            offset: record_start,
                            detail: e.to_string(),
                        })?;
                }
                other => {
                    return Err(RecordingError::Corrupt {
                        offset: record_start,
                        detail: format!("unknown record tag {other}"),
                    })
                }
            }
            if p.pos != payload.len() {
                return Err(RecordingError::Corrupt {
                    offset: (payload_start + p.pos) as u64,
                    detail: "trailing bytes in record".into(),
                });
            }
        }
        Ok(rec)
    }
}

fn push_f64(out: &mut Vec<u8>, x: f64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn encode_frame(f: &Frame, out: &mut Vec<u8>) {
    out.extend_from_slice(&f.step.to_le_bytes());
    push_f64(out, f.sim_time);
    out.extend_from_slice(&f.wall_time_ms.to_le_bytes());
    push_f64(out, f.potential);
    push_f64(out, f.kinetic);
    out.extend_from_slice(&(f.positions.len() as u32).to_le_bytes());
    for v in f.positions.iter().chain(&f.user_forces) {
        for x in v {
            push_f64(out, *x);
        }
    }
}

fn encode_event(e: &SharedStateEvent, out: &mut Vec<u8>) -> Result<(), RecordingError> {
    out.extend_from_slice(&e.wall_time_ms.to_le_bytes());
    out.extend_from_slice(&(e.key.len() as u32).to_le_bytes());
    out.extend_from_slice(e.key.as_bytes());
    let value = serde_json::to_vec(&e.value).map_err(|e| RecordingError::Format(e.to_string()))?;
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(&value);
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], RecordingError> {
        if self.bytes.len() - self.pos < n {
            return Err(RecordingError::Corrupt {
                offset: self.pos as u64,
                detail: format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, RecordingError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, RecordingError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, RecordingError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn vec3s(&mut self, n: usize, what: &str) -> Result<Vec<Vec3>, RecordingError> {
        let raw = self.take(n * 24, what)?;
        Ok(raw
            .chunks_exact(24)
            .map(|c| {
                let x = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap());
                [x(0), x(1), x(2)]
            })
            .collect())
    }
}

fn decode_frame(c: &mut Cursor) -> Result<Frame, RecordingError> {
    let step = c.u64("frame step")?;
    let sim_time = c.f64("frame time")?;
    let wall_time_ms = c.u64("frame wall time")?;
    let potential = c.f64("potential")?;
    let kinetic = c.f64("kinetic")?;
    let n = c.u32("atom count")? as usize;
    let positions = c.vec3s(n, "positions")?;
    let user_forces = c.vec3s(n, "user forces")?;
    Ok(Frame {
        step,
        sim_time,
        wall_time_ms,
        positions,
        user_forces,
        potential,
        kinetic,
    })
}

fn decode_event(c: &mut Cursor) -> Result<SharedStateEvent, RecordingError> {
    let wall_time_ms = c.u64("event wall time")?;
    let key_len = c.u32("key length")? as usize;
    let key_at = c.pos as u64;
    let key = std::str::from_utf8(c.take(key_len, "key")?)
        .map_err(|e| RecordingError::Corrupt {
            offset: key_at,
            detail: format!("key: {e}"),
        })?
        .to_string();
    let value_len = c.u32("value length")? as usize;
    let value_at = c.pos as u64;
    let value = serde_json::from_slice(c.take(value_len, "value")?).map_err(|e| {
        RecordingError::Corrupt {
            offset: value_at,
            detail: format!("value: {e}"),
        }
    })?;
    Ok(SharedStateEvent {
        wall_time_ms,
        key,
        value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemRef {
    Frame(usize),
    Event(usize),
}

/// Both streams merged by wall time; a frame goes before an event with the same time.
fn merged_order(rec: &Recording) -> Vec<ItemRef> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(rec.frames.len() + rec.events.len());
    while i < rec.frames.len() || j < rec.events.len() {
        let take_frame = match (rec.frames.get(i), rec.events.get(j)) {
            (Some(f), Some(e)) => f.wall_time_ms <= e.wall_time_ms,
            (Some(_), None) => true,
            _ => false,
        };
        if take_frame {
            out.push(ItemRef::Frame(i));
            i += 1;
        } else {
            out.push(ItemRef::Event(j));
            j += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayItem {
    Frame(Frame),
    Event(SharedStateEvent),
}

impl ReplayItem {
    pub fn wall_time_ms(&self) -> u64 {
        match self {
            ReplayItem::Frame(f) => f.wall_time_ms,
            ReplayItem::Event(e) => e.wall_time_ms,
        }
    }
}

/// Cursor over the merged stream of a recording with play/pause/restart/seek.
/// Pacing is left to the caller: [`Player::delay_to_next`] gives the wall-clock
/// gap to the next item at the current speed. The recording is never modified.
#[derive(Debug, Clone)]
pub struct Player {
    rec: Arc<Recording>,
    order: Vec<ItemRef>,
    cursor: usize,
    paused: bool,
    speed: f64,
}

impl Player {
    /// Starts paused at the first item.
    pub fn new(rec: Arc<Recording>, speed: f64) -> Self {
        assert!(
            speed > 0.0 && speed.is_finite(),
            "replay speed must be positive"
        );
        let order = merged_order(&rec);
        Player {
            rec,
            order,
            cursor: 0,
            paused: true,
            speed,
        }
    }

    pub fn recording(&self) -> &Recording {
        &self.rec
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self) -> usize {
        self.cursor
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.order.len()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn play(&mut self) {
        self.paused = false;
    }

    pub fn pause(&mut self) {
        self.paused = true;
    }

    pub fn restart(&mut self) {
        self.cursor = 0;
    }

    /// Moves to the first frame whose step is at least `step`.
    pub fn seek(&mut self, step: u64) -> Result<(), RecordingError> {
        let last = self.rec.frames.last().ok_or(RecordingError::Empty)?.step;
        if step > last {
            return Err(RecordingError::SeekRange { step, last });
        }
        let frames = &self.rec.frames;
        self.cursor = self
            .order
            .iter()
            .position(|it| matches!(it, ItemRef::Frame(k) if frames[*k].step >= step))
            .expect("a frame at or after step exists");
        Ok(())
    }

    fn wall_time(&self, k: usize) -> u64 {
        match self.order[k] {
            ItemRef::Frame(i) => self.rec.frames[i].wall_time_ms,
            ItemRef::Event(i) => self.rec.events[i].wall_time_ms,
        }
    }

    pub fn peek(&self) -> Option<ReplayItem> {
        let it = *self.order.get(self.cursor)?;
        Some(match it {
            ItemRef::Frame(i) => ReplayItem::Frame(self.rec.frames[i].clone()),
            ItemRef::Event(i) => ReplayItem::Event(self.rec.events[i].clone()),
        })
    }

    /// Wall-clock milliseconds between the previous item and the next one, scaled by speed.
    pub fn delay_to_next(&self) -> Option<f64> {
        if self.is_finished() {
            return None;
        }
        let next = self.wall_time(self.cursor);
        let prev = if self.cursor == 0 {
            next
        } else {
            self.wall_time(self.cursor - 1)
        };
        Some(next.saturating_sub(prev) as f64 / self.speed)
    }

    /// Next item regardless of the paused flag.
    pub fn advance(&mut self) -> Option<ReplayItem> {
        let it = self.peek()?;
        self.cursor += 1;
        Some(it)
    }
}

impl Iterator for Player {
    type Item = ReplayItem;

    fn next(&mut self) -> Option<ReplayItem> {
        self.advance()
    }
}

/// Collects rollout snapshots into a recording, keeping every `frame_interval`-th
/// integrator step. Wall time is synthetic: `ms_per_frame` per kept frame.
#[derive(Debug)]
pub struct Recorder {
    pub recording: Recording,
    pub ms_per_frame: u64,
    kept: u64,
    error: Option<RecordingError>,
}

impl Recorder {
    pub fn new(header: Header, ms_per_frame: u64) -> Self {
        Recorder {
            recording: Recording::new(header),
            ms_per_frame,
            kept: 0,
            error: None,
        }
    }

    pub fn finish(self) -> Result<Recording, RecordingError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.recording),
        }
    }

    /// Wall time the next kept frame will carry.
    pub fn clock_ms(&self) -> u64 {
        self.kept * self.ms_per_frame
    }
}

impl FrameSink for Recorder {
    fn frame(&mut self, frame: FrameSnapshot) {
        let k = self.recording.header.frame_interval.max(1);
        if !frame.step.is_multiple_of(k) || self.error.is_some() {
            return;
        }
        let f = Frame::from_snapshot(frame, self.clock_ms());
        match self.recording.append_frame(f) {
            Ok(()) => self.kept += 1,
            Err(e) => self.error = Some(e),
        }
    }
}
