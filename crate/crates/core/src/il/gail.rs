use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bc_train, BcConfig, Discretizer, ExpertDataset, IlError, OccupancyEstimate};
use crate::env::{rollout, TaskConfig, Trajectory};
use crate::math;
use crate::md::{TaskId, F_MAX};
use crate::nn::{GaussianPolicy, Mlp, NnError, OptimState, PolicyMode, StochasticPolicy};
use crate::rng;

/// Logit bound that keeps `D` strictly inside (0, 1).
pub const LOGIT_CLAMP: f64 = 30.0;

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + math::ln(1.0 + math::exp(-x.abs()))
}

/// Classifier over (observation, normalized action). Trained so that
/// `D -> 1` on policy pairs and `D -> 0` on expert pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub net: Mlp,
    pub opt: OptimState,
    pub action_scale: f64,
}

impl Discriminator {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        action_scale: f64,
        lr: f64,
        seed: u64,
    ) -> Result<Self, IlError> {
        let mut sizes = vec![obs_dim + act_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let net = Mlp::new(&sizes, seed)?;
        let opt = OptimState::new(net.n_params(), lr);
        Ok(Discriminator {
            net,
            opt,
            action_scale,
        })
    }

    fn input(&self, obs: &[f64], action: &[f64]) -> Vec<f64> {
        let mut x = obs.to_vec();
        x.extend(action.iter().map(|a| a / self.action_scale));
        x
    }

    /// Clamped logit of `D(s, a)`.
    pub fn logit(&self, obs: &[f64], action: &[f64]) -> Result<f64, IlError> {
        let z = self.net.forward(&self.input(obs, action))?[0];
        if !z.is_finite() {
            return Err(NnError::NonFinite { sample: 0 }.into());
        }
        Ok(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
    }

    pub fn prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, IlError> {
        Ok(math::sigmoid(self.logit(obs, action)?))
    }

    /// Per-step policy cost `ln D(s, a)`.
    pub fn cost(&self, obs: &[f64], action: &[f64]) -> Result<f64, IlError> {
        Ok(-softplus(-self.logit(obs, action)?))
    }

    /// `-(mean_policy ln D + mean_expert ln(1 - D))` and its parameter gradient.
    pub fn loss_grad(
        &self,
        expert: &[(&[f64], &[f64])],
        policy: &[(&[f64], &[f64])],
    ) -> Result<(f64, Vec<f64>), IlError> {
        if expert.is_empty() || policy.is_empty() {
            return Err(IlError::EmptyDataset);
        }
        let mut grads = vec![0.0; self.net.n_params()];
        let mut loss = 0.0;
        let mut offset = 0;
        for (batch, from_policy) in [(policy, true), (expert, false)] {
            let w = 1.0 / batch.len() as f64;
            for (k, (o, a)) in batch.iter().enumerate() {
                let trace = self.net.forward_trace(&self.input(o, a))?;
                let raw = trace.output()[0];
                if !raw.is_finite() {
                    return Err(NnError::NonFinite { sample: offset + k }.into());
                }
                let z = raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
                let (l, dz) = if from_policy {
                    (softplus(-z), math::sigmoid(z) - 1.0)
                } else {
                    (softplus(z), math::sigmoid(z))
                };
                loss += w * l;
                if raw.abs() < LOGIT_CLAMP {
                    self.net.backward(&trace, &[w * dz], &mut grads);
                }
            }
            offset += batch.len();
        }
        Ok((loss, grads))
    }

    /// Balanced accuracy: the mean over the two classes of the fraction on the
    /// correct side of 0.5. Exact ties count half.
    pub fn accuracy(
        &self,
        expert: &[(&[f64], &[f64])],
        policy: &[(&[f64], &[f64])],
    ) -> Result<f64, IlError> {
        if expert.is_empty() || policy.is_empty() {
            return Err(IlError::EmptyDataset);
        }
        let mut total = 0.0;
        for (batch, from_policy) in [(policy, true), (expert, false)] {
            let mut score = 0.0;
            for (o, a) in batch {
                let z = self.logit(o, a)?;
                score += if z == 0.0 {
                    0.5
                } else if (z > 0.0) == from_policy {
                    1.0
                } else {
                    0.0
                };
            }
            total += 0.5 * score / batch.len() as f64;
        }
        Ok(total)
    }
}

type Pair<'a> = (&'a [f64], &'a [f64]);

fn split_holdout<'a>(pairs: &[Pair<'a>], seed: u64) -> (Vec<Pair<'a>>, Vec<Pair<'a>>) {
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    rng::stream(seed, 0xD15C).shuffle(&mut idx);
    let n_hold = pairs.len() / 5;
    if n_hold == 0 {
        return (pairs.to_vec(), pairs.to_vec());
    }
    let hold = idx[..n_hold].iter().map(|&i| pairs[i]).collect();
    let train = idx[n_hold..].iter().map(|&i| pairs[i]).collect();
    (train, hold)
}

/// `steps` full-batch Adam steps on the discriminator loss over 80% of each
/// batch; returns the accuracy on the held-out 20%.
pub fn discriminator_update(
    disc: &mut Discriminator,
    expert: &[(&[f64], &[f64])],
    policy: &[(&[f64], &[f64])],
    steps: usize,
    seed: u64,
) -> Result<f64, IlError> {
    if expert.is_empty() || policy.is_empty() {
        return Err(IlError::EmptyDataset);
    }
    let (e_train, e_hold) = split_holdout(expert, seed);
    let (p_train, p_hold) = split_holdout(policy, rng::mix(seed, 1));
    let mut params = disc.net.params().to_vec();
    for _ in 0..steps {
        let (_, g) = disc.loss_grad(&e_train, &p_train)?;
        disc.opt.step(&mut params, &g);
        disc.net.params_mut().copy_from_slice(&params);
    }
    disc.accuracy(&e_hold, &p_hold)
}

/// Discounted sums of future rewards within one episode.
pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    returns_to_go_with_tail(rewards, gamma, 0.0)
}

/// As [`returns_to_go`], with `tail` as the value of the state after the last step.
pub fn returns_to_go_with_tail(rewards: &[f64], gamma: f64, tail: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = tail;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgConfig {
    pub clip: f64,
    pub gamma: f64,
    /// Entropy coefficient; each step's reward gains `-lambda * ln pi_old(a|s)`.
    pub lambda: f64,
    /// Cost treated as neutral. Each step earns `-(cost - cost_offset)`; the
    /// default `ln(1/2)` is the cost at an undecided discriminator, which is
    /// also what an absorbing end-of-episode state is assumed to pay.
    pub cost_offset: f64,
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for PgConfig {
    fn default() -> Self {
        PgConfig {
            clip: 0.2,
            gamma: 0.99,
            lambda: 1e-3,
            cost_offset: -core::f64::consts::LN_2,
            epochs: 5,
            minibatch: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgStats {
    pub mean_reward: f64,
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    /// Fraction of samples whose ratio ended outside `1 ± clip`.
    pub clip_fraction: f64,
}

/// One surrogate sample: normalized action, sampling-time log-prob, advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSample<'a> {
    pub obs: &'a [f64],
    pub action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
}

/// Mean clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)` with
/// `r = pi(a|s) / pi_old(a|s)`, and its gradient with respect to the policy
/// parameters.
pub fn surrogate(
    policy: &GaussianPolicy,
    samples: &[SurrogateSample],
    clip: f64,
) -> Result<(f64, Vec<f64>), IlError> {
    if samples.is_empty() {
        return Err(IlError::EmptyDataset);
    }
    let mut grads = vec![0.0; policy.n_params()];
    let mut value = 0.0;
    let w = 1.0 / samples.len() as f64;
    for s in samples {
        let lp = policy.log_prob(s.obs, &s.action)?;
        let ratio = math::exp(lp - s.old_log_prob);
        let unclipped = ratio * s.advantage;
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * s.advantage;
        value += w * unclipped.min(clipped);
        if unclipped <= clipped {
            policy.accumulate_log_prob_grad(
                s.obs,
                &s.action,
                w * s.advantage * ratio,
                &mut grads,
            )?;
        }
    }
    Ok((value, grads))
}

/// Per-step rewards `-(cost - cost_offset) - lambda * ln pi_old`, discounted returns-to-go,
/// minus the batch mean, divided by the batch standard deviation.
///
/// A successful episode ends in an absorbing state that keeps paying
/// `absorbing_reward` per step, so its last return carries the tail value
/// `absorbing_reward / (1 - gamma)`. Cut-off episodes get no tail.
pub fn advantages(
    trajectories: &[Trajectory],
    cfg: &PgConfig,
    absorbing_reward: f64,
) -> Result<(Vec<f64>, f64), IlError> {
    let mut adv = Vec::new();
    let mut reward_sum = 0.0;
    for (i, t) in trajectories.iter().enumerate() {
        if t.log_probs.len() != t.len() {
            return Err(IlError::MissingLogProbs(i));
        }
        if t.costs.len() != t.len() {
            return Err(IlError::Dimension {
                expected: t.len(),
                got: t.costs.len(),
            });
        }
        let rewards: Vec<f64> = t
            .costs
            .iter()
            .zip(&t.log_probs)
            .map(|(c, lp)| -(c - cfg.cost_offset) - cfg.lambda * lp)
            .collect();
        reward_sum += rewards.iter().sum::<f64>();
        let tail = if t.success {
            absorbing_reward / (1.0 - cfg.gamma)
        } else {
            0.0
        };
        adv.extend(returns_to_go_with_tail(&rewards, cfg.gamma, tail));
    }
    if adv.is_empty() {
        return Err(IlError::EmptyDataset);
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = math::sqrt(var);
    for a in &mut adv {
        *a = if std > 1e-12 * (1.0 + mean.abs()) {
            (*a - mean) / std
        } else {
            0.0
        };
    }
    Ok((adv, reward_sum / n))
}

/// Several epochs of minibatch Adam ascent on the clipped surrogate, using the
/// costs already stored in each trajectory. See [`advantages`] for `absorbing_reward`.
pub fn policy_gradient_step(
    policy: &mut GaussianPolicy,
    opt: &mut OptimState,
    trajectories: &[Trajectory],
    cfg: &PgConfig,
    absorbing_reward: f64,
    seed: u64,
) -> Result<PgStats, IlError> {
    let (adv, mean_reward) = advantages(trajectories, cfg, absorbing_reward)?;
    let scale = policy.action_scale;
    let samples: Vec<SurrogateSample> = trajectories
        .iter()
        .flat_map(|t| {
            t.observations
                .iter()
                .zip(&t.actions)
                .zip(&t.log_probs)
                .map(move |((o, a), lp)| SurrogateSample {
                    obs: o.as_slice(),
                    action: a.iter().map(|x| x / scale).collect(),
                    old_log_prob: *lp,
                    advantage: 0.0,
                })
        })
        .zip(&adv)
        .map(|(mut s, a)| {
            s.advantage = *a;
            s
        })
        .collect();
    let (surrogate_before, _) = surrogate(policy, &samples, cfg.clip)?;
    let mut params = policy.params();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mb = cfg.minibatch.max(1);
    if adv.iter().any(|a| *a != 0.0) {
        for epoch in 0..cfg.epochs {
            rng::stream(seed, 0x9600 + epoch as u64).shuffle(&mut order);
            for chunk in order.chunks(mb) {
                let batch: Vec<SurrogateSample> =
                    chunk.iter().map(|&i| samples[i].clone()).collect();
                let (_, g) = surrogate(policy, &batch, cfg.clip)?;
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                opt.step(&mut params, &neg);
                policy.set_params(&params)?;
                params = policy.params();
            }
        }
    }
    let (surrogate_after, _) = surrogate(policy, &samples, cfg.clip)?;
    let mut clipped = 0usize;
    for s in &samples {
        let r = math::exp(policy.log_prob(s.obs, &s.action)? - s.old_log_prob);
        if (r - 1.0).abs() > cfg.clip {
            clipped += 1;
        }
    }
    Ok(PgStats {
        mean_reward,
        surrogate_before,
        surrogate_after,
        clip_fraction: clipped as f64 / samples.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GailConfig {
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    /// Training rollouts are cut after this many actions.
    pub rollout_max_steps: usize,
    pub policy_hidden: Vec<usize>,
    pub init_log_std: f64,
    pub policy_lr: f64,
    pub disc_hidden: Vec<usize>,
    pub disc_lr: f64,
    pub disc_steps: usize,
    pub pg: PgConfig,
    pub task: TaskConfig,
    /// Optional behavioral-cloning initialization of the policy.
    pub bc_warm_start: Option<BcConfig>,
    /// Pay successful episodes an absorbing tail at the current expert-level
    /// reward (never below the neutral value 0). When false there is no tail.
    pub absorbing_bootstrap: bool,
    /// Fraction of expert trajectories withheld from training for the final accuracy check.
    pub holdout_fraction: f64,
    /// Fresh policy episodes sampled for the final accuracy check.
    pub final_eval_episodes: usize,
}

impl Default for GailConfig {
    fn default() -> Self {
        GailConfig {
            iterations: 300,
            episodes_per_iteration: 8,
            rollout_max_steps: 150,
            policy_hidden: vec![64, 64],
            init_log_std: -2.5,
            policy_lr: 3e-5,
            disc_hidden: vec![64, 64],
            disc_lr: 3e-4,
            disc_steps: 5,
            pg: PgConfig::default(),
            task: TaskConfig::default(),
            bc_warm_start: Some(BcConfig {
                epochs: 50,
                ..BcConfig::default()
            }),
            absorbing_bootstrap: true,
            holdout_fraction: 0.1,
            final_eval_episodes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GailIteration {
    pub iteration: usize,
    pub disc_accuracy: f64,
    /// Mean of `ln D` over this iteration's policy pairs, after the discriminator update.
    pub mean_cost: f64,
    pub success_rate: f64,
    pub mean_episode_length: f64,
    /// `sum |rho_policy - rho_expert|` on the nanotube grid; `None` for other tasks.
    pub occupancy_gap: Option<f64>,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GailResult {
    pub policy: GaussianPolicy,
    pub discriminator: Discriminator,
    pub iterations: Vec<GailIteration>,
    /// Balanced accuracy of the final discriminator on withheld expert
    /// trajectories against fresh samples of the final policy.
    pub final_disc_accuracy: f64,
}

/// Seed of training episode `episode` in iteration `iteration`.
pub fn gail_episode_seed(seed: u64, iteration: usize, episode: usize) -> u64 {
    rng::mix(
        rng::mix(seed, 0x6A11),
        ((iteration as u64) << 20) | episode as u64,
    )
}

/// Alternates sampled rollouts, a discriminator update and a clipped policy
/// gradient step with per-step cost `ln D(s, a)`.
pub fn gail_train(
    task: TaskId,
    expert: &ExpertDataset,
    cfg: &GailConfig,
    seed: u64,
) -> Result<GailResult, IlError> {
    if cfg.iterations == 0 || cfg.episodes_per_iteration == 0 || cfg.rollout_max_steps == 0 {
        return Err(IlError::Config("GAIL budgets must be positive".into()));
    }
    let (obs_dim, act_dim) = expert.dims()?;
    let (expert, withheld) = expert.split_by_trajectory(cfg.holdout_fraction, rng::mix(seed, 3));
    let expert = &expert;
    let mut sizes = vec![obs_dim];
    sizes.extend_from_slice(&cfg.policy_hidden);
    sizes.push(act_dim);
    let mut policy = GaussianPolicy::new(&sizes, cfg.init_log_std, F_MAX, rng::mix(seed, 1))?;
    if let Some(bc) = &cfg.bc_warm_start {
        policy = bc_train(expert, policy, bc)?.policy;
        policy.set_log_std(&vec![cfg.init_log_std; act_dim]);
    }
    let mut disc = Discriminator::new(
        obs_dim,
        act_dim,
        &cfg.disc_hidden,
        F_MAX,
        cfg.disc_lr,
        rng::mix(seed, 2),
    )?;
    let mut opt = OptimState::new(policy.n_params(), cfg.policy_lr);
    let expert_pairs: Vec<(&[f64], &[f64])> = expert
        .samples
        .iter()
        .map(|s| (s.obs.as_slice(), s.action.as_slice()))
        .collect();
    let disc_grid = Discretizer::default();
    let expert_occupancy = match task {
        TaskId::Nanotube => Some(OccupancyEstimate::from_pairs(
            expert_pairs.iter().copied(),
            &disc_grid,
        )?),
        _ => None,
    };
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let it_seed = rng::mix(seed, 0x1000 + it as u64);
        let mut sampler = StochasticPolicy::new(&policy, PolicyMode::Sample, it_seed);
        let mut trajs = (0..cfg.episodes_per_iteration)
            .map(|e| {
                rollout(
                    &mut sampler,
                    task,
                    gail_episode_seed(seed, it, e),
                    cfg.rollout_max_steps,
                    cfg.task,
                    None,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;

        let policy_pairs: Vec<(&[f64], &[f64])> = trajs
            .iter()
            .flat_map(|t| {
                t.observations
                    .iter()
                    .zip(&t.actions)
                    .map(|(o, a)| (o.as_slice(), a.as_slice()))
            })
            .collect();
        let mut idx: Vec<usize> = (0..expert_pairs.len()).collect();
        rng::stream(it_seed, 0xE5).shuffle(&mut idx);
        let expert_batch: Vec<(&[f64], &[f64])> = idx
            .iter()
            .take(policy_pairs.len().max(64))
            .map(|&i| expert_pairs[i])
            .collect();
        let disc_accuracy = discriminator_update(
            &mut disc,
            &expert_batch,
            &policy_pairs,
            cfg.disc_steps,
            it_seed,
        )?;
        let occupancy_gap = match &expert_occupancy {
            Some(e) => Some(
                OccupancyEstimate::from_pairs(policy_pairs.iter().copied(), &disc_grid)?.gap(e),
            ),
            None => None,
        };
        drop(policy_pairs);

        let mut cost_sum = 0.0;
        let mut n_steps = 0usize;
        for t in &mut trajs {
            t.costs = t
                .observations
                .iter()
                .zip(&t.actions)
                .map(|(o, a)| disc.cost(o, a))
                .collect::<Result<_, _>>()?;
            cost_sum += t.costs.iter().sum::<f64>();
            n_steps += t.len();
        }
        let absorbing_reward = if cfg.absorbing_bootstrap {
            let mut total = 0.0;
            for (o, a) in &expert_batch {
                total -= disc.cost(o, a)? - cfg.pg.cost_offset;
            }
            (total / expert_batch.len() as f64).max(0.0)
        } else {
            0.0
        };
        let stats = policy_gradient_step(
            &mut policy,
            &mut opt,
            &trajs,
            &cfg.pg,
            absorbing_reward,
            it_seed,
        )?;
        let n = trajs.len() as f64;
        history.push(GailIteration {
            iteration: it,
            disc_accuracy,
            mean_cost: cost_sum / n_steps as f64,
            success_rate: trajs.iter().filter(|t| t.success).count() as f64 / n,
            mean_episode_length: n_steps as f64 / n,
            occupancy_gap,
            clip_fraction: stats.clip_fraction,
        });
    }
    let withheld = if withheld.is_empty() {
        expert.clone()
    } else {
        withheld
    };
    let withheld_pairs: Vec<(&[f64], &[f64])> = withheld
        .samples
        .iter()
        .map(|s| (s.obs.as_slice(), s.action.as_slice()))
        .collect();
    let mut sampler = StochasticPolicy::new(
        &policy,
        PolicyMode::Sample,
        rng::mix(seed, 0x1000 + cfg.iterations as u64),
    );
    let fresh = (0..cfg.final_eval_episodes.max(1))
        .map(|e| {
            rollout(
                &mut sampler,
                task,
                gail_episode_seed(seed, cfg.iterations, e),
                cfg.rollout_max_steps,
                cfg.task,
                None,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fresh_pairs: Vec<(&[f64], &[f64])> = fresh
        .iter()
        .flat_map(|t| {
            t.observations
                .iter()
                .zip(&t.actions)
                .map(|(o, a)| (o.as_slice(), a.as_slice()))
        })
        .collect();
    let final_disc_accuracy = disc.accuracy(&withheld_pairs, &fresh_pairs)?;
    Ok(GailResult {
        policy,
        discriminator: disc,
        iterations: history,
        final_disc_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq3_terms_at_half() {
        // a zero network has logit 0, so D = 0.5 everywhere
        let disc = Discriminator {
            net: Mlp::zeros(&[3, 4, 1]).unwrap(),
            opt: OptimState::new(21, 1e-3),
            action_scale: 1.0,
        };
        let o = [0.1, 0.2];
        let a = [0.3];
        let value = disc.cost(&o, &a).unwrap() + math::ln(1.0 - disc.prob(&o, &a).unwrap());
        assert!((value - (-1.386294)).abs() < 1e-6);
        assert!((disc.cost(&o, &a).unwrap() - math::ln(0.5)).abs() < 1e-15);
        let (loss, _) = disc.loss_grad(&[(&o, &a)], &[(&o, &a)]).unwrap();
        assert!((loss - 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(disc.accuracy(&[(&o, &a)], &[(&o, &a)]).unwrap(), 0.5);
    }

    #[test]
    fn output_stays_inside_unit_interval() {
        let mut disc = Discriminator::new(1, 1, &[4], 1.0, 1e-3, 0).unwrap();
        disc.net.params_mut().iter_mut().for_each(|p| *p = 1e3);
        let d = disc.prob(&[5.0], &[5.0]).unwrap();
        assert!(d > 0.0 && d < 1.0);
    }

    #[test]
    fn returns_to_go_discounts() {
        assert_eq!(returns_to_go(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
    }

    #[test]
    fn missing_log_probs_rejected() {
        let t = Trajectory {
            task: TaskId::Nanotube,
            seed: 0,
            observations: vec![vec![0.0; 9]],
            actions: vec![[0.0; 3]],
            log_probs: vec![],
            costs: vec![0.0],
            final_observation: vec![0.0; 9],
            terminal: false,
            success: false,
        };
        assert_eq!(
            advantages(&[t], &PgConfig::default(), 0.0).unwrap_err(),
            IlError::MissingLogProbs(0)
        );
    }

    #[test]
    fn zero_budget_rejected() {
        let cfg = GailConfig {
            iterations: 0,
            ..GailConfig::default()
        };
        let err = gail_train(TaskId::Nanotube, &ExpertDataset::new(), &cfg, 0).unwrap_err();
        assert!(matches!(err, IlError::Config(_)));
    }
}
