use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bc_train, BcConfig, ExpertDataset, IlError, Sample, SourceKind};
use crate::env::{rollout, Policy, TaskConfig};
use crate::md::{TaskId, F_MAX};
use crate::nn::{GaussianPolicy, PolicyMode, StochasticPolicy};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaggerConfig {
    pub rounds: usize,
    pub episodes_per_round: usize,
    /// Learner rollouts (rounds after the first) are cut after this many actions.
    pub rollout_max_steps: usize,
    pub policy_hidden: Vec<usize>,
    pub init_log_std: f64,
    pub bc: BcConfig,
    pub task: TaskConfig,
}

impl Default for DaggerConfig {
    fn default() -> Self {
        DaggerConfig {
            rounds: 5,
            episodes_per_round: 3,
            rollout_max_steps: 300,
            policy_hidden: vec![64, 64],
            init_log_std: -0.5,
            bc: BcConfig {
                epochs: 50,
                ..BcConfig::default()
            },
            task: TaskConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaggerResult {
    pub policy: GaussianPolicy,
    /// Policy after round 1, i.e. plain behavioral cloning on the expert rollouts.
    pub first_round_policy: GaussianPolicy,
    pub dataset: ExpertDataset,
    /// Aggregated dataset size after each round.
    pub dataset_sizes: Vec<usize>,
    /// Success fraction of the learner rollouts of each round after the first.
    pub rollout_success: Vec<f64>,
}

/// Seed of episode `episode` in round `round` (0-based).
pub fn dagger_episode_seed(seed: u64, round: usize, episode: usize) -> u64 {
    rng::mix(
        rng::mix(seed, 0xDA66),
        ((round as u64) << 20) | episode as u64,
    )
}

/// Initial learner for [`dagger_train`] and the matching plain-BC baseline.
pub fn dagger_initial_policy(
    obs_dim: usize,
    act_dim: usize,
    cfg: &DaggerConfig,
    seed: u64,
) -> Result<GaussianPolicy, IlError> {
    let mut sizes = vec![obs_dim];
    sizes.extend_from_slice(&cfg.policy_hidden);
    sizes.push(act_dim);
    Ok(GaussianPolicy::new(
        &sizes,
        cfg.init_log_std,
        F_MAX,
        rng::mix(seed, 1),
    )?)
}

/// Round 1 clones the expert's own rollouts. Every later round rolls out the
/// current learner (policy mean), labels the visited observations with the
/// expert's action, aggregates and retrains from the same initialization.
pub fn dagger_train<E: Policy + ?Sized>(
    task: TaskId,
    expert: &mut E,
    cfg: &DaggerConfig,
    seed: u64,
) -> Result<DaggerResult, IlError> {
    if cfg.rounds == 0 || cfg.episodes_per_round == 0 || cfg.rollout_max_steps == 0 {
        return Err(IlError::Config(
            "DAgger needs positive rounds and episode counts".into(),
        ));
    }
    let mut dataset = ExpertDataset::new();
    for e in 0..cfg.episodes_per_round {
        let t = rollout(
            expert,
            task,
            dagger_episode_seed(seed, 0, e),
            cfg.task.step_budget.max(1),
            cfg.task,
            None,
        )?;
        dataset.push_trajectory(&t, SourceKind::Scripted);
    }
    let (obs_dim, act_dim) = dataset.dims()?;
    let init = dagger_initial_policy(obs_dim, act_dim, cfg, seed)?;
    let mut policy = bc_train(&dataset, init.clone(), &cfg.bc)?.policy;
    let first_round_policy = policy.clone();
    let mut dataset_sizes = vec![dataset.len()];
    let mut rollout_success = Vec::new();
    for round in 1..cfg.rounds {
        let mut learner = StochasticPolicy::new(&policy, PolicyMode::Mean, 0);
        let mut successes = 0;
        let mut new_samples = Vec::new();
        for e in 0..cfg.episodes_per_round {
            let t = rollout(
                &mut learner,
                task,
                dagger_episode_seed(seed, round, e),
                cfg.rollout_max_steps,
                cfg.task,
                None,
            )?;
            successes += t.success as usize;
            expert.begin_episode(t.seed);
            let id = dataset.next_id() + e;
            for (step, obs) in t.observations.iter().enumerate() {
                let label = expert.act(obs, step)?.action;
                new_samples.push(Sample {
                    obs: obs.clone(),
                    action: label.to_vec(),
                    trajectory: id,
                    kind: SourceKind::Scripted,
                });
            }
        }
        dataset.samples.extend(new_samples);
        dataset_sizes.push(dataset.len());
        rollout_success.push(successes as f64 / cfg.episodes_per_round as f64);
        policy = bc_train(&dataset, init.clone(), &cfg.bc)?.policy;
    }
    Ok(DaggerResult {
        policy,
        first_round_policy,
        dataset,
        dataset_sizes,
        rollout_success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_rejected() {
        let cfg = DaggerConfig {
            rounds: 0,
            ..DaggerConfig::default()
        };
        let mut expert = crate::env::ExpertPolicy::default();
        assert!(matches!(
            dagger_train(TaskId::Nanotube, &mut expert, &cfg, 0),
            Err(IlError::Config(_))
        ));
    }
}
