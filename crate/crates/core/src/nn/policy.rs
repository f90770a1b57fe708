use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Mlp, NnError};
use crate::env::{EnvError, Policy, PolicyStep};
use crate::math::{self, LN_2PI};
use crate::rng;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Diagonal Gaussian over actions with an MLP mean and a state-independent
/// `log_std`.
///
/// The network works in normalized action units; the environment sees
/// `action_scale` times a normalized action. Densities and losses are all
/// expressed over normalized actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    log_std: Vec<f64>,
    pub action_scale: f64,
}

impl GaussianPolicy {
    /// `sizes` is the full layer list of the mean network, input first.
    pub fn new(
        sizes: &[usize],
        log_std: f64,
        action_scale: f64,
        seed: u64,
    ) -> Result<Self, NnError> {
        let mean = Mlp::new(sizes, seed)?;
        let d = mean.output_dim();
        Self::from_parts(mean, vec![log_std; d], action_scale)
    }

    pub fn from_parts(mean: Mlp, log_std: Vec<f64>, action_scale: f64) -> Result<Self, NnError> {
        if log_std.len() != mean.output_dim() {
            return Err(NnError::Dimension {
                expected: mean.output_dim(),
                got: log_std.len(),
            });
        }
        let mut p = GaussianPolicy {
            mean,
            log_std,
            action_scale,
        };
        p.clamp_log_std();
        Ok(p)
    }

    pub fn obs_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn set_log_std(&mut self, log_std: &[f64]) {
        self.log_std.copy_from_slice(log_std);
        self.clamp_log_std();
    }

    fn clamp_log_std(&mut self) {
        for l in &mut self.log_std {
            *l = l.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Mean-network parameters followed by `log_std`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.mean.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn n_params(&self) -> usize {
        self.mean.n_params() + self.log_std.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.n_params() {
            return Err(NnError::Dimension {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        let n = self.mean.n_params();
        self.mean.params_mut().copy_from_slice(&params[..n]);
        self.log_std.copy_from_slice(&params[n..]);
        self.clamp_log_std();
        Ok(())
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>, NnError> {
        self.mean.forward(obs)
    }

    /// Entropy in nats; independent of the observation.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|l| 0.5 * (LN_2PI + 1.0) + l).sum()
    }

    fn density(&self, mu: &[f64], action: &[f64]) -> f64 {
        mu.iter()
            .zip(action)
            .zip(&self.log_std)
            .map(|((m, a), l)| {
                let z = (a - m) / math::exp(*l);
                -0.5 * z * z - l - 0.5 * LN_2PI
            })
            .sum()
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, NnError> {
        if action.len() != self.act_dim() {
            return Err(NnError::Dimension {
                expected: self.act_dim(),
                got: action.len(),
            });
        }
        let mu = self.mean.forward(obs)?;
        Ok(self.density(&mu, action))
    }

    /// `log π(a|s)` and its gradient with respect to [`Self::params`].
    pub fn log_prob_grad(&self, obs: &[f64], action: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
        let mut grads = vec![0.0; self.n_params()];
        let lp = self.accumulate_log_prob_grad(obs, action, 1.0, &mut grads)?;
        Ok((lp, grads))
    }

    /// Adds `weight * d log π(a|s) / d params` into `grads`; returns `log π(a|s)`.
    pub fn accumulate_log_prob_grad(
        &self,
        obs: &[f64],
        action: &[f64],
        weight: f64,
        grads: &mut [f64],
    ) -> Result<f64, NnError> {
        if action.len() != self.act_dim() {
            return Err(NnError::Dimension {
                expected: self.act_dim(),
                got: action.len(),
            });
        }
        let trace = self.mean.forward_trace(obs)?;
        let mu = trace.output();
        let lp = self.density(mu, action);
        let n = self.mean.n_params();
        let mut d_mu = vec![0.0; mu.len()];
        for d in 0..mu.len() {
            let var = math::exp(2.0 * self.log_std[d]);
            let diff = action[d] - mu[d];
            d_mu[d] = weight * diff / var;
            grads[n + d] += weight * (diff * diff / var - 1.0);
        }
        self.mean.backward(&trace, &d_mu, &mut grads[..n]);
        Ok(lp)
    }

    /// Batch-mean Gaussian negative log-likelihood of `actions`.
    pub fn nll_grad<O: AsRef<[f64]>, A: AsRef<[f64]>>(
        &self,
        obs: &[O],
        actions: &[A],
    ) -> Result<(f64, Vec<f64>), NnError> {
        if obs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        if obs.len() != actions.len() {
            return Err(NnError::Dimension {
                expected: obs.len(),
                got: actions.len(),
            });
        }
        let mut grads = vec![0.0; self.n_params()];
        let mut total = 0.0;
        for (k, (o, a)) in obs.iter().zip(actions).enumerate() {
            let lp = self.accumulate_log_prob_grad(o.as_ref(), a.as_ref(), -1.0, &mut grads)?;
            if !lp.is_finite() {
                return Err(NnError::NonFinite { sample: k });
            }
            total -= lp;
        }
        let inv = 1.0 / obs.len() as f64;
        grads.iter_mut().for_each(|g| *g *= inv);
        Ok((total * inv, grads))
    }

    /// Batch-mean squared error of the policy mean; the `log_std` entries of the gradient are zero.
    pub fn mse_grad<O: AsRef<[f64]>, A: AsRef<[f64]>>(
        &self,
        obs: &[O],
        actions: &[A],
    ) -> Result<(f64, Vec<f64>), NnError> {
        let (loss, mut grads) = self.mean.mse_grad(obs, actions)?;
        grads.extend(core::iter::repeat_n(0.0, self.act_dim()));
        Ok((loss, grads))
    }

    /// Reparameterized draw `a = mu(s) + sigma * xi` with `xi` seeded by `seed`.
    pub fn sample_and_logprob(&self, obs: &[f64], seed: u64) -> Result<(Vec<f64>, f64), NnError> {
        let mu = self.mean.forward(obs)?;
        let mut s = rng::stream(seed, 0x9A55);
        let action: Vec<f64> = mu
            .iter()
            .zip(&self.log_std)
            .map(|(m, l)| m + math::exp(*l) * s.normal())
            .collect();
        let lp = self.density(&mu, &action);
        Ok((action, lp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Act with the policy mean.
    Mean,
    /// Sample from the Gaussian and report log-probabilities.
    Sample,
}

/// Adapter that drives an environment with a [`GaussianPolicy`].
///
/// Sampling noise for step `t` of the episode with seed `s` depends only on
/// `(noise_seed, s, t)`.
#[derive(Debug, Clone)]
pub struct StochasticPolicy<'a> {
    pub policy: &'a GaussianPolicy,
    pub mode: PolicyMode,
    pub noise_seed: u64,
    episode: u64,
}

impl<'a> StochasticPolicy<'a> {
    pub fn new(policy: &'a GaussianPolicy, mode: PolicyMode, noise_seed: u64) -> Self {
        StochasticPolicy {
            policy,
            mode,
            noise_seed,
            episode: 0,
        }
    }
}

impl Policy for StochasticPolicy<'_> {
    fn begin_episode(&mut self, seed: u64) {
        self.episode = rng::mix(self.noise_seed, seed);
    }

    fn act(&mut self, obs: &[f64], step: usize) -> Result<PolicyStep, EnvError> {
        let to_env = |e: NnError| EnvError::Policy(alloc::format!("{e}"));
        if self.policy.act_dim() != 3 {
            return Err(to_env(NnError::Dimension {
                expected: 3,
                got: self.policy.act_dim(),
            }));
        }
        let (a, log_prob) = match self.mode {
            PolicyMode::Mean => (self.policy.mean_action(obs).map_err(to_env)?, None),
            PolicyMode::Sample => {
                let (a, lp) = self
                    .policy
                    .sample_and_logprob(obs, rng::mix(self.episode, step as u64))
                    .map_err(to_env)?;
                (a, Some(lp))
            }
        };
        let k = self.policy.action_scale;
        Ok(PolicyStep {
            action: [a[0] * k, a[1] * k, a[2] * k],
            log_prob,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_gaussian_nll_and_entropy() {
        let p = GaussianPolicy::from_parts(Mlp::zeros(&[2, 1]).unwrap(), vec![0.0], 1.0).unwrap();
        let (nll, _) = p.nll_grad(&[[0.3, -0.2]], &[[0.0]]).unwrap();
        assert!((nll - 0.918939).abs() < 1e-6, "{nll}");
        assert!((p.entropy() - 1.418939).abs() < 1e-6);
    }

    #[test]
    fn log_std_is_clamped() {
        let mut p = GaussianPolicy::new(&[2, 3, 2], 9.0, 1.0, 0).unwrap();
        assert_eq!(p.log_std(), &[LOG_STD_MAX, LOG_STD_MAX]);
        p.set_log_std(&[-40.0, 0.5]);
        assert_eq!(p.log_std(), &[LOG_STD_MIN, 0.5]);
    }

    #[test]
    fn small_sigma_samples_hug_the_mean() {
        let p = GaussianPolicy::new(&[4, 8, 3], LOG_STD_MIN, 1.0, 3).unwrap();
        let obs = [0.1, 0.2, -0.3, 0.4];
        let mu = p.mean_action(&obs).unwrap();
        let mut close = 0;
        for seed in 0..1000 {
            let (a, _) = p.sample_and_logprob(&obs, seed).unwrap();
            if a.iter().zip(&mu).all(|(a, m)| (a - m).abs() < 0.03) {
                close += 1;
            }
        }
        assert!(close >= 990, "{close}");
    }

    #[test]
    fn sampled_log_prob_matches_independent_density() {
        let p = GaussianPolicy::new(&[3, 5, 2], -0.7, 1.0, 8).unwrap();
        let obs = [0.5, -0.25, 1.0];
        let (a, lp) = p.sample_and_logprob(&obs, 42).unwrap();
        let mu = p.mean_action(&obs).unwrap();
        let sigma = (-0.7f64).exp();
        let mut density = 1.0;
        for d in 0..2 {
            let z = (a[d] - mu[d]) / sigma;
            density *= (-0.5 * z * z).exp() / (sigma * (2.0 * core::f64::consts::PI).sqrt());
        }
        assert!((lp - density.ln()).abs() < 1e-12);
        assert_eq!(lp, p.log_prob(&obs, &a).unwrap());
    }

    #[test]
    fn entropy_ignores_observation_and_counts_dims() {
        let p = GaussianPolicy::new(&[2, 3], 0.25, 1.0, 0).unwrap();
        assert!((p.entropy() - 3.0 * (1.418938533204672 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn params_round_trip() {
        let p = GaussianPolicy::new(&[2, 4, 3], -1.0, 10.0, 5).unwrap();
        let mut q = GaussianPolicy::new(&[2, 4, 3], 0.0, 10.0, 6).unwrap();
        q.set_params(&p.params()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_params(&[0.0; 3]).is_err());
    }

    #[test]
    fn adapter_scales_and_is_reproducible() {
        let p = GaussianPolicy::new(&[9, 8, 3], -1.0, 1000.0, 1).unwrap();
        let obs = [0.1; 9];
        let mut mean = StochasticPolicy::new(&p, PolicyMode::Mean, 0);
        let s = mean.act(&obs, 0).unwrap();
        let mu = p.mean_action(&obs).unwrap();
        assert_eq!(s.action, [mu[0] * 1000.0, mu[1] * 1000.0, mu[2] * 1000.0]);
        assert_eq!(s.log_prob, None);

        let mut a = StochasticPolicy::new(&p, PolicyMode::Sample, 7);
        let mut b = StochasticPolicy::new(&p, PolicyMode::Sample, 7);
        a.begin_episode(3);
        b.begin_episode(3);
        assert_eq!(a.act(&obs, 5).unwrap(), b.act(&obs, 5).unwrap());
        assert_ne!(a.act(&obs, 5).unwrap(), a.act(&obs, 6).unwrap());
    }
}
