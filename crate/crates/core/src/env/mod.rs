//! Reset/step environments over the MD engine for the two benchmark tasks.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, Vec3};
use crate::md::{
    self, build_system_at, tube_geometry, InteractionMode, InteractiveForce, MdError, SimState,
    Simulation, TaskId, Thermostat, TubeGeometry, ALANINE_BEADS, F_MAX, METHANE_CARBON,
};
use crate::rng;

mod expert;
mod observation;
mod rollout;
mod success;

pub use expert::{expert_action, ExpertPolicy, ScriptedExpertConfig};
pub use observation::{
    alanine_observation, methane_com, nanotube_observation, ALANINE_OBS_DIM, NANOTUBE_OBS_DIM,
};
pub use rollout::{rollout, FrameSink, FrameSnapshot, Policy, PolicyStep, Trajectory};
pub use success::{is_success, SuccessTracker};

/// Agent observation; 9 values for the nanotube task, 12 for alanine17.
pub type Observation = Vec<f64>;
/// External force on the controlled atom, kJ/mol/nm. Tube frame for the nanotube task.
pub type Action = Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Md(#[from] MdError),
    #[error("step called on a finished episode")]
    Terminal,
    #[error("policy produced a non-finite action at step {step}")]
    PolicyOutput { step: usize },
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("{0}")]
    Policy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// Integrator steps per action.
    pub n_substeps: usize,
    /// Actions per episode before it is cut off.
    pub step_budget: usize,
    /// Half-width (nm) of the uniform start-position jitter, per tube-frame axis.
    pub start_jitter: f64,
    /// How far (nm) past the entrance/exit planes the methane must be to count as crossing.
    pub success_margin: f64,
    pub dt: f64,
    pub gamma: f64,
    pub temperature: f64,
    /// Bead pushed by the agent in the alanine17 task.
    pub controlled_bead: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            n_substeps: 10,
            step_budget: 2000,
            start_jitter: 0.1,
            success_margin: 0.1,
            dt: md::DEFAULT_DT,
            gamma: md::DEFAULT_GAMMA,
            temperature: md::DEFAULT_TEMPERATURE,
            controlled_bead: ALANINE_BEADS - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: usize,
    pub success: bool,
    /// Episode ended because the step budget ran out.
    pub truncated: bool,
    /// Force actually applied after clamping, lab frame.
    pub applied_force: Vec3,
}

#[derive(Debug, Clone)]
pub struct TaskEnv {
    task: TaskId,
    cfg: TaskConfig,
    seed: u64,
    sim: Simulation,
    tube: TubeGeometry,
    controlled: usize,
    steps: usize,
    done: bool,
    tracker: SuccessTracker,
}

impl TaskEnv {
    /// Fresh episode; returns the environment and its first observation.
    pub fn reset(
        task: TaskId,
        seed: u64,
        cfg: TaskConfig,
    ) -> Result<(Self, Observation), EnvError> {
        let (topology, mut state) = build_system_at(task, seed, cfg.temperature)?;
        let tube = tube_geometry();
        let controlled = match task {
            TaskId::Nanotube => {
                let mut s = rng::stream(seed, 0x0517);
                let jitter = [
                    s.uniform_in(-cfg.start_jitter, cfg.start_jitter),
                    s.uniform_in(-cfg.start_jitter, cfg.start_jitter),
                    s.uniform_in(-cfg.start_jitter, cfg.start_jitter),
                ];
                let shift = tube.to_lab(jitter);
                for &i in &md::methane_indices() {
                    state.positions[i] = math::add(state.positions[i], shift);
                }
                METHANE_CARBON
            }
            TaskId::Alanine17 => cfg.controlled_bead.min(ALANINE_BEADS - 1),
        };
        let sim = Simulation::new(topology, state)?;
        let mut env = TaskEnv {
            task,
            cfg,
            seed,
            sim,
            tube,
            controlled,
            steps: 0,
            done: false,
            tracker: SuccessTracker::new(tube, cfg.success_margin),
        };
        let obs = env.observation();
        if task == TaskId::Nanotube {
            env.tracker.push(obs[0..3].try_into().unwrap());
        }
        Ok((env, obs))
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn config(&self) -> &TaskConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn tube(&self) -> &TubeGeometry {
        &self.tube
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn succeeded(&self) -> bool {
        self.tracker.succeeded()
    }

    pub fn observation(&self) -> Observation {
        match self.task {
            TaskId::Nanotube => {
                nanotube_observation(&self.tube, self.sim.topology(), self.sim.state())
            }
            TaskId::Alanine17 => alanine_observation(self.sim.state()),
        }
    }

    pub fn state(&self) -> &SimState {
        self.sim.state()
    }

    /// Applies `action` (clamped to `F_MAX`) to the controlled atom for `n_substeps` integrator steps.
    pub fn step(&mut self, action: Action) -> Result<(Observation, bool, StepInfo), EnvError> {
        if self.done {
            return Err(EnvError::Terminal);
        }
        if !math::is_finite3(action) {
            return Err(EnvError::PolicyOutput { step: self.steps });
        }
        let clamped = math::clamp_norm(action, F_MAX);
        let lab = match self.task {
            TaskId::Nanotube => self.tube.to_lab(clamped),
            TaskId::Alanine17 => clamped,
        };
        self.sim.set_interactions(alloc::vec![InteractiveForce {
            id: String::from("agent"),
            atoms: alloc::vec![self.controlled],
            controller: [0.0; 3],
            scale: 1.0,
            mode: InteractionMode::Constant { force: lab },
        }])?;
        let thermostat = Thermostat::Langevin {
            gamma: self.cfg.gamma,
            temperature: self.cfg.temperature,
            seed: rng::mix(self.seed, 0x7E12),
        };
        for _ in 0..self.cfg.n_substeps {
            self.sim.step(self.cfg.dt, thermostat)?;
        }
        self.steps += 1;
        let obs = self.observation();
        if self.task == TaskId::Nanotube {
            self.tracker.push(obs[0..3].try_into().unwrap());
        }
        let success = self.tracker.succeeded();
        let truncated = !success && self.steps >= self.cfg.step_budget;
        self.done = success || truncated;
        let info = StepInfo {
            step: self.steps,
            success,
            truncated,
            applied_force: lab,
        };
        Ok((obs, self.done, info))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_deterministic_and_seeded() {
        let cfg = TaskConfig::default();
        let (_, a) = TaskEnv::reset(TaskId::Nanotube, 7, cfg).unwrap();
        let (_, b) = TaskEnv::reset(TaskId::Nanotube, 7, cfg).unwrap();
        let (_, c) = TaskEnv::reset(TaskId::Nanotube, 8, cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn start_is_below_entrance() {
        let cfg = TaskConfig::default();
        let g = tube_geometry();
        for seed in 0..50 {
            let (_, obs) = TaskEnv::reset(TaskId::Nanotube, seed, cfg).unwrap();
            assert!(obs[2] < g.entrance() - cfg.success_margin);
        }
    }

    #[test]
    fn oversized_action_is_clamped() {
        let (mut env, _) = TaskEnv::reset(TaskId::Nanotube, 1, TaskConfig::default()).unwrap();
        let (_, _, info) = env.step([2.0 * F_MAX, 0.0, 0.0]).unwrap();
        assert!((math::norm(info.applied_force) - F_MAX).abs() < 1e-9);
        assert_eq!(
            env.simulation().user_forces()[METHANE_CARBON],
            info.applied_force
        );
    }

    #[test]
    fn stepping_past_the_end_fails() {
        let cfg = TaskConfig {
            step_budget: 2,
            ..TaskConfig::default()
        };
        let (mut env, _) = TaskEnv::reset(TaskId::Alanine17, 1, cfg).unwrap();
        assert!(!env.step([0.0; 3]).unwrap().1);
        let (_, done, info) = env.step([0.0; 3]).unwrap();
        assert!(done && info.truncated && !info.success);
        assert_eq!(env.step([0.0; 3]), Err(EnvError::Terminal));
    }

    #[test]
    fn non_finite_action_is_rejected() {
        let (mut env, _) = TaskEnv::reset(TaskId::Nanotube, 1, TaskConfig::default()).unwrap();
        assert_eq!(
            env.step([f64::NAN, 0.0, 0.0]),
            Err(EnvError::PolicyOutput { step: 0 })
        );
    }

    #[test]
    fn unknown_task_string() {
        assert!(matches!(
            "protein".parse::<TaskId>(),
            Err(MdError::UnsupportedTask(_))
        ));
    }
}
