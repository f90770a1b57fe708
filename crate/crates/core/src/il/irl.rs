use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{DiscreteTrajectory, GridMdp, IlError};
use crate::math;

/// Linear reward `R(s) = theta . phi(s)` with one-hot state features, so
/// `theta[s]` is the reward of state `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub theta: Vec<f64>,
}

impl RewardModel {
    pub fn zeros(n_states: usize) -> Self {
        RewardModel {
            theta: vec![0.0; n_states],
        }
    }

    pub fn reward(&self, s: usize) -> f64 {
        self.theta[s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrlConfig {
    pub iterations: usize,
    pub lr: f64,
}

impl Default for IrlConfig {
    fn default() -> Self {
        IrlConfig {
            iterations: 200,
            lr: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlResult {
    pub reward: RewardModel,
    /// `theta` before the first update and after every update.
    pub theta_trace: Vec<Vec<f64>>,
    /// Sup-norm of the feature-expectation gap at each iteration.
    pub gap_trace: Vec<f64>,
}

/// Time-indexed soft-optimal policies for a finite horizon, undiscounted:
/// `Q_t(s,a) = R(s) + E[V_{t+1}]`, `V_t = logsumexp_a Q_t`, `V_H = 0`.
/// Entry `t` holds `pi_t(a|s)` at `[s * n_actions + a]`.
pub fn soft_policy(mdp: &GridMdp, reward: &[f64], horizon: usize) -> Vec<Vec<f64>> {
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let mut v = vec![0.0; ns];
    let mut policies = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let mut pi = vec![0.0; ns * na];
        let mut next_v = vec![0.0; ns];
        for s in 0..ns {
            let q: Vec<f64> = (0..na)
                .map(|a| {
                    reward[s]
                        + mdp
                            .row(s, a)
                            .iter()
                            .zip(&v)
                            .map(|(p, v)| p * v)
                            .sum::<f64>()
                })
                .collect();
            let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = q.iter().map(|q| math::exp(q - m)).sum();
            next_v[s] = m + math::ln(z);
            for a in 0..na {
                pi[s * na + a] = math::exp(q[a] - next_v[s]);
            }
        }
        policies[t] = pi;
        v = next_v;
    }
    policies
}

/// `sum_t weights[t] * D_t`, where `D_0 = start` and `D_{t+1}` propagates `D_t`
/// through `policies[t]` and the transitions.
pub fn soft_visitation(
    mdp: &GridMdp,
    policies: &[Vec<f64>],
    start: &[f64],
    weights: &[f64],
) -> Vec<f64> {
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let mut d = start.to_vec();
    let mut total = vec![0.0; ns];
    for (t, w) in weights.iter().enumerate() {
        for s in 0..ns {
            total[s] += w * d[s];
        }
        if t + 1 == weights.len() {
            break;
        }
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if d[s] == 0.0 {
                continue;
            }
            for a in 0..na {
                let m = d[s] * policies[t][s * na + a];
                for (n, p) in next.iter_mut().zip(mdp.row(s, a)) {
                    *n += m * p;
                }
            }
        }
        d = next;
    }
    total
}

/// Per-trajectory time-averaged one-hot state features, averaged over trajectories.
pub fn expert_feature_expectations(
    n_states: usize,
    trajectories: &[DiscreteTrajectory],
) -> Vec<f64> {
    let mut mu = vec![0.0; n_states];
    let n = trajectories.len() as f64;
    for t in trajectories {
        let h = t.actions.len() as f64;
        for &s in &t.states[..t.actions.len()] {
            mu[s] += 1.0 / (h * n);
        }
    }
    mu
}

/// Start-state distribution and per-time weights matching [`expert_feature_expectations`].
fn start_and_weights(n_states: usize, trajectories: &[DiscreteTrajectory]) -> (Vec<f64>, Vec<f64>) {
    let n = trajectories.len() as f64;
    let horizon = trajectories
        .iter()
        .map(|t| t.actions.len())
        .max()
        .unwrap_or(0);
    let mut start = vec![0.0; n_states];
    let mut weights = vec![0.0; horizon];
    for t in trajectories {
        start[t.states[0]] += 1.0 / n;
        let h = t.actions.len();
        for w in &mut weights[..h] {
            *w += 1.0 / (h as f64 * n);
        }
    }
    (start, weights)
}

fn check(mdp: &GridMdp, trajectories: &[DiscreteTrajectory]) -> Result<(), IlError> {
    mdp.validate()?;
    if trajectories.is_empty() {
        return Err(IlError::EmptyDataset);
    }
    for (i, t) in trajectories.iter().enumerate() {
        if t.actions.is_empty() {
            return Err(IlError::ZeroLength(i));
        }
        if t.states.len() != t.actions.len() + 1 {
            return Err(IlError::Dimension {
                expected: t.actions.len() + 1,
                got: t.states.len(),
            });
        }
        if let Some(&s) = t.states.iter().find(|&&s| s >= mdp.n_states) {
            return Err(IlError::OutOfRange {
                what: "states",
                index: s,
                len: mdp.n_states,
            });
        }
        if let Some(&a) = t.actions.iter().find(|&&a| a >= mdp.n_actions) {
            return Err(IlError::OutOfRange {
                what: "actions",
                index: a,
                len: mdp.n_actions,
            });
        }
    }
    Ok(())
}

/// Expert feature expectations minus those of the soft-optimal policy for `theta`.
pub fn maxent_gradient(
    mdp: &GridMdp,
    theta: &[f64],
    trajectories: &[DiscreteTrajectory],
) -> Result<Vec<f64>, IlError> {
    check(mdp, trajectories)?;
    if theta.len() != mdp.n_states {
        return Err(IlError::Dimension {
            expected: mdp.n_states,
            got: theta.len(),
        });
    }
    Ok(gradient(mdp, theta, trajectories))
}

fn gradient(mdp: &GridMdp, theta: &[f64], trajectories: &[DiscreteTrajectory]) -> Vec<f64> {
    let mu_e = expert_feature_expectations(mdp.n_states, trajectories);
    let (start, weights) = start_and_weights(mdp.n_states, trajectories);
    let policies = soft_policy(mdp, theta, weights.len());
    let mu = soft_visitation(mdp, &policies, &start, &weights);
    mu_e.iter().zip(&mu).map(|(e, m)| e - m).collect()
}

/// Gradient ascent on the max-entropy log-likelihood from `theta = 0`. Any
/// reward stored in `mdp` is ignored.
pub fn maxent_irl(
    mdp: &GridMdp,
    trajectories: &[DiscreteTrajectory],
    cfg: &IrlConfig,
) -> Result<IrlResult, IlError> {
    check(mdp, trajectories)?;
    let mut theta = vec![0.0; mdp.n_states];
    let mut theta_trace = vec![theta.clone()];
    let mut gap_trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let g = gradient(mdp, &theta, trajectories);
        gap_trace.push(g.iter().fold(0.0, |m, x| f64::max(m, x.abs())));
        for (t, g) in theta.iter_mut().zip(&g) {
            *t += cfg.lr * g;
        }
        theta_trace.push(theta.clone());
    }
    Ok(IrlResult {
        reward: RewardModel { theta },
        theta_trace,
        gap_trace,
    })
}
