//! Demonstrations as recordings and back.
//!
//! An agent episode is recorded with one frame per action plus an `agent/step`
//! event per action carrying the exact observation and action, and a closing
//! `episode/end` event. Recordings without `agent/step` events (a human steering
//! the live session) are turned into samples from the frames alone.

use std::path::{Path, PathBuf};

use demoforge_core::env::{
    methane_com, nanotube_observation, rollout, Policy, TaskConfig, Trajectory,
};
use demoforge_core::il::{ExpertDataset, Sample, SourceKind};
use demoforge_core::md::{build_system_at, methane_indices, tube_geometry, SimState, TaskId};
use demoforge_core::{math, Vec3};
use serde_json::json;

use crate::recording::{Frame, Header, Recorder, Recording, RecordingError, SharedStateEvent};

/// Synthetic wall-clock spacing of recorded agent frames (30 frames/s).
pub const FRAME_MS: u64 = 33;

pub const STEP_KEY: &str = "agent/step";
pub const END_KEY: &str = "episode/end";

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error(transparent)]
    Env(#[from] demoforge_core::env::EnvError),
    #[error(transparent)]
    Md(#[from] demoforge_core::md::MdError),
    #[error("malformed `{key}` event: {detail}")]
    Event { key: String, detail: String },
    #[error("recording has too few frames to derive actions")]
    TooShort,
    #[error("human demonstrations are only derived for the nanotube task")]
    Unsupported,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("no .mdil files in {0}")]
    NoRecordings(PathBuf),
}

/// Runs one episode and records it.
pub fn record_episode<P: Policy + ?Sized>(
    policy: &mut P,
    task: TaskId,
    seed: u64,
    max_steps: usize,
    cfg: TaskConfig,
    kind: SourceKind,
) -> Result<(Trajectory, Recording), DemoError> {
    let (topology, _) = build_system_at(task, seed, cfg.temperature)?;
    let mut header = Header::new(task, topology, cfg.dt, seed);
    header.frame_interval = cfg.n_substeps as u64;
    let mut recorder = Recorder::new(header, FRAME_MS);
    let traj = rollout(policy, task, seed, max_steps, cfg, Some(&mut recorder))?;
    let mut rec = recorder.finish()?;
    let source = match kind {
        SourceKind::Scripted => "scripted",
        SourceKind::Human => "human",
    };
    for (t, (obs, action)) in traj.observations.iter().zip(&traj.actions).enumerate() {
        let mut value = json!({ "t": t, "observation": obs, "action": action, "source": source });
        if let Some(lp) = traj.log_probs.get(t) {
            value["log_prob"] = json!(lp);
        }
        rec.append_event(SharedStateEvent {
            wall_time_ms: t as u64 * FRAME_MS,
            key: STEP_KEY.into(),
            value,
        })?;
    }
    rec.append_event(SharedStateEvent {
        wall_time_ms: traj.len() as u64 * FRAME_MS,
        key: END_KEY.into(),
        value: json!({ "success": traj.success, "terminal": traj.terminal, "steps": traj.len() }),
    })?;
    Ok((traj, rec))
}

/// Success flag stored by [`record_episode`], if any.
pub fn recorded_success(rec: &Recording) -> Option<bool> {
    rec.events()
        .iter()
        .rev()
        .find(|e| e.key == END_KEY)
        .and_then(|e| e.value["success"].as_bool())
}

fn vec_field(e: &SharedStateEvent, name: &str) -> Result<Vec<f64>, DemoError> {
    let bad = |detail: String| DemoError::Event {
        key: e.key.clone(),
        detail,
    };
    let arr = e.value[name]
        .as_array()
        .ok_or_else(|| bad(format!("missing `{name}`")))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| bad(format!("non-numeric `{name}`")))
        })
        .collect()
}

/// Observation recomputed from a frame's positions. The velocity block is zero
/// because frames carry no velocities.
pub fn frame_observation(rec: &Recording, frame: &Frame) -> Vec<f64> {
    let state = SimState {
        positions: frame.positions.clone(),
        velocities: vec![[0.0; 3]; frame.positions.len()],
        time: frame.sim_time,
        step: frame.step,
    };
    nanotube_observation(&tube_geometry(), &rec.header.topology, &state)
}

fn com(rec: &Recording, frame: &Frame) -> Vec3 {
    let state = SimState {
        positions: frame.positions.clone(),
        velocities: vec![[0.0; 3]; frame.positions.len()],
        time: 0.0,
        step: 0,
    };
    methane_com(&rec.header.topology, &state).0
}

/// Appends the samples of one recording to `data` under a fresh trajectory id.
pub fn append_recording(data: &mut ExpertDataset, rec: &Recording) -> Result<usize, DemoError> {
    let id = data.next_id();
    let steps: Vec<&SharedStateEvent> = rec.events().iter().filter(|e| e.key == STEP_KEY).collect();
    if !steps.is_empty() {
        for e in steps {
            let kind = match e.value["source"].as_str() {
                Some("human") => SourceKind::Human,
                _ => SourceKind::Scripted,
            };
            data.samples.push(Sample {
                obs: vec_field(e, "observation")?,
                action: vec_field(e, "action")?,
                trajectory: id,
                kind,
            });
        }
        return Ok(id);
    }
    if rec.header.task != TaskId::Nanotube {
        return Err(DemoError::Unsupported);
    }
    let frames = rec.frames();
    if frames.len() < 2 {
        return Err(DemoError::TooShort);
    }
    // Human steering: velocity from finite differences of the COM, action from
    // the total user force on the methane, both in the tube frame.
    let tube = tube_geometry();
    let coms: Vec<Vec3> = frames.iter().map(|f| com(rec, f)).collect();
    for k in 0..frames.len() - 1 {
        let (lo, hi) = (k.saturating_sub(1), k + 1);
        let span = frames[hi].sim_time - frames[lo].sim_time;
        let v = if span > 0.0 {
            math::scale(math::sub(coms[hi], coms[lo]), 1.0 / span)
        } else {
            [0.0; 3]
        };
        let mut obs = frame_observation(rec, &frames[k]);
        obs[3..6].copy_from_slice(&tube.to_tube(v));
        // the force held during the interval shows up in the frame that ends it
        let force = methane_indices().iter().fold([0.0; 3], |acc, &i| {
            math::add(acc, frames[k + 1].user_forces[i])
        });
        data.samples.push(Sample {
            obs,
            action: tube.to_tube(force).to_vec(),
            trajectory: id,
            kind: SourceKind::Human,
        });
    }
    Ok(id)
}

/// `.mdil` files: the path itself, or every `.mdil` inside a directory (sorted by name).
pub fn recording_paths(path: &Path) -> Result<Vec<PathBuf>, DemoError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mdil"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(DemoError::NoRecordings(path.to_path_buf()));
    }
    Ok(out)
}

pub fn dataset_from_recordings(paths: &[PathBuf]) -> Result<ExpertDataset, DemoError> {
    let mut data = ExpertDataset::default();
    for p in paths {
        append_recording(&mut data, &Recording::read_file(p)?)?;
    }
    Ok(data)
}

/// Groups samples back into trajectories by id. Samples carry no final
/// observation, so each trajectory ends on a copy of its last observation.
pub fn dataset_trajectories(data: &ExpertDataset, task: TaskId) -> Vec<Trajectory> {
    let mut out: Vec<Trajectory> = Vec::new();
    let mut current: Option<usize> = None;
    for s in &data.samples {
        if current != Some(s.trajectory) {
            current = Some(s.trajectory);
            out.push(Trajectory {
                task,
                seed: s.trajectory as u64,
                observations: vec![],
                actions: vec![],
                log_probs: vec![],
                costs: vec![],
                final_observation: vec![],
                terminal: true,
                success: false,
            });
        }
        let t = out.last_mut().expect("pushed above");
        t.observations.push(s.obs.clone());
        let a = &s.action;
        t.actions.push([a[0], a[1], a[2]]);
    }
    for t in &mut out {
        t.final_observation = t.observations.last().cloned().unwrap_or_default();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use demoforge_core::env::ExpertPolicy;

    #[test]
    fn recorded_episode_reproduces_the_trajectory() {
        let mut ex = ExpertPolicy::default();
        let (traj, rec) = record_episode(
            &mut ex,
            TaskId::Nanotube,
            3,
            50,
            TaskConfig::default(),
            SourceKind::Scripted,
        )
        .unwrap();
        assert_eq!(rec.frames().len(), traj.len() + 1);
        let mut data = ExpertDataset::default();
        append_recording(&mut data, &rec).unwrap();
        let direct =
            ExpertDataset::from_trajectories(std::slice::from_ref(&traj), SourceKind::Scripted);
        assert_eq!(data, direct);
        // positions and the entrance direction come back exactly from the frames
        for (t, obs) in traj.observations.iter().enumerate() {
            let re = frame_observation(&rec, &rec.frames()[t]);
            for k in [0, 1, 2, 6, 7, 8] {
                assert!((re[k] - obs[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frames_only_recording_yields_human_samples() {
        let mut ex = ExpertPolicy::default();
        let (traj, rec) = record_episode(
            &mut ex,
            TaskId::Nanotube,
            3,
            30,
            TaskConfig::default(),
            SourceKind::Scripted,
        )
        .unwrap();
        let mut bare = Recording::new(rec.header.clone());
        for f in rec.frames() {
            bare.append_frame(f.clone()).unwrap();
        }
        let mut data = ExpertDataset::default();
        append_recording(&mut data, &bare).unwrap();
        assert_eq!(data.len(), traj.len());
        assert!(data.samples.iter().all(|s| s.kind == SourceKind::Human));
        // the applied force is the clamped action, expressed in the tube frame
        for (s, a) in data.samples.iter().zip(&traj.actions) {
            for k in 0..3 {
                assert!(
                    (s.action[k] - a[k]).abs() < 1e-9,
                    "{:?} vs {:?}",
                    s.action,
                    a
                );
            }
        }
    }
}
