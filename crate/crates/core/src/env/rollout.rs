use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Action, EnvError, Observation, TaskConfig, TaskEnv};
use crate::math::Vec3;
use crate::md::TaskId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyStep {
    pub action: Action,
    /// Log-density of `action` under the policy at sampling time, if stochastic.
    pub log_prob: Option<f64>,
}

/// Anything that maps observations to actions.
pub trait Policy {
    /// Called once before the first action of an episode.
    fn begin_episode(&mut self, _seed: u64) {}

    fn act(&mut self, obs: &[f64], step: usize) -> Result<PolicyStep, EnvError>;
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn begin_episode(&mut self, seed: u64) {
        (**self).begin_episode(seed)
    }

    fn act(&mut self, obs: &[f64], step: usize) -> Result<PolicyStep, EnvError> {
        (**self).act(obs, step)
    }
}

/// One simulation snapshot emitted during a rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSnapshot {
    pub step: u64,
    pub sim_time: f64,
    pub positions: Vec<Vec3>,
    pub user_forces: Vec<Vec3>,
    pub potential: f64,
    pub kinetic: f64,
}

/// Receives frames as a rollout produces them.
pub trait FrameSink {
    fn frame(&mut self, frame: FrameSnapshot);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: TaskId,
    pub seed: u64,
    /// Observation before each action.
    pub observations: Vec<Observation>,
    /// Actions as emitted by the policy (before clamping).
    pub actions: Vec<Action>,
    /// Sampling-time log-probabilities; empty for deterministic policies.
    pub log_probs: Vec<f64>,
    /// Optional per-step cost, filled in by training code.
    pub costs: Vec<f64>,
    pub final_observation: Observation,
    /// The episode ended (success or step budget) rather than being cut at `max_steps`.
    pub terminal: bool,
    pub success: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

fn snapshot(env: &TaskEnv) -> FrameSnapshot {
    let sim = env.simulation();
    FrameSnapshot {
        step: sim.state().step,
        sim_time: sim.state().time,
        positions: sim.state().positions.clone(),
        user_forces: sim.user_forces().to_vec(),
        potential: sim.potential(),
        kinetic: sim.kinetic(),
    }
}

/// Runs one episode of at most `max_steps` actions. Fully determined by the
/// policy's parameters and `seed`.
pub fn rollout<P: Policy + ?Sized>(
    policy: &mut P,
    task: TaskId,
    seed: u64,
    max_steps: usize,
    cfg: TaskConfig,
    mut sink: Option<&mut dyn FrameSink>,
) -> Result<Trajectory, EnvError> {
    if max_steps == 0 {
        return Err(EnvError::NoSteps);
    }
    let (mut env, mut obs) = TaskEnv::reset(task, seed, cfg)?;
    policy.begin_episode(seed);
    if let Some(s) = sink.as_deref_mut() {
        s.frame(snapshot(&env));
    }
    let mut traj = Trajectory {
        task,
        seed,
        observations: Vec::new(),
        actions: Vec::new(),
        log_probs: Vec::new(),
        costs: Vec::new(),
        final_observation: Vec::new(),
        terminal: false,
        success: false,
    };
    for step in 0..max_steps {
        let out = policy.act(&obs, step)?;
        if !crate::math::is_finite3(out.action) {
            return Err(EnvError::PolicyOutput { step });
        }
        let (next, done, info) = env.step(out.action)?;
        if let Some(s) = sink.as_deref_mut() {
            s.frame(snapshot(&env));
        }
        traj.observations.push(core::mem::replace(&mut obs, next));
        traj.actions.push(out.action);
        if let Some(lp) = out.log_prob {
            traj.log_probs.push(lp);
        }
        if done {
            traj.terminal = true;
            traj.success = info.success;
            break;
        }
    }
    traj.final_observation = obs;
    Ok(traj)
}
