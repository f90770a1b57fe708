use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ExpertDataset, IlError};
use crate::nn::{GaussianPolicy, OptimState};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Squared error of the policy mean.
    Mse,
    /// Gaussian negative log-likelihood.
    Nll,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig {
            loss: LossKind::Mse,
            epochs: 200,
            batch_size: 256,
            lr: 1e-3,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcResult {
    pub policy: GaussianPolicy,
    /// Training-split loss before the first update.
    pub initial_train_loss: f64,
    /// Sample-weighted mean of the minibatch losses seen in each epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch; empty when there is no validation split.
    pub val_loss: Vec<f64>,
}

fn batch_loss(
    policy: &GaussianPolicy,
    loss: LossKind,
    obs: &[&[f64]],
    actions: &[&[f64]],
) -> Result<(f64, Vec<f64>), IlError> {
    Ok(match loss {
        LossKind::Mse => policy.mse_grad(obs, actions)?,
        LossKind::Nll => policy.nll_grad(obs, actions)?,
    })
}

/// Actions of `data` divided by the policy's action scale.
fn normalized(data: &ExpertDataset, scale: f64) -> Vec<Vec<f64>> {
    data.samples
        .iter()
        .map(|s| s.action.iter().map(|a| a / scale).collect())
        .collect()
}

fn full_loss(
    policy: &GaussianPolicy,
    loss: LossKind,
    data: &ExpertDataset,
) -> Result<f64, IlError> {
    let obs: Vec<&[f64]> = data.samples.iter().map(|s| s.obs.as_slice()).collect();
    let acts = normalized(data, policy.action_scale);
    let acts: Vec<&[f64]> = acts.iter().map(|a| a.as_slice()).collect();
    Ok(batch_loss(policy, loss, &obs, &acts)?.0)
}

/// Minibatch Adam on the batch-mean loss over the training split.
///
/// The split is by trajectory id, and the whole run is a deterministic
/// function of `(data, policy, cfg)`.
pub fn bc_train(
    data: &ExpertDataset,
    policy: GaussianPolicy,
    cfg: &BcConfig,
) -> Result<BcResult, IlError> {
    let (obs_dim, act_dim) = data.dims()?;
    if obs_dim != policy.obs_dim() {
        return Err(IlError::Dimension {
            expected: policy.obs_dim(),
            got: obs_dim,
        });
    }
    if act_dim != policy.act_dim() {
        return Err(IlError::Dimension {
            expected: policy.act_dim(),
            got: act_dim,
        });
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(IlError::Config(alloc::format!(
            "batch_size {} lr {}",
            cfg.batch_size,
            cfg.lr
        )));
    }
    let (train, val) = data.split_by_trajectory(cfg.val_fraction, cfg.seed);
    let acts = normalized(&train, policy.action_scale);
    let mut policy = policy;
    let mut opt = OptimState::new(policy.n_params(), cfg.lr);
    let initial_train_loss = full_loss(&policy, cfg.loss, &train)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_loss = Vec::new();
    let mut params = policy.params();
    for epoch in 0..cfg.epochs {
        rng::stream(cfg.seed, 0xBC00 + epoch as u64).shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let obs: Vec<&[f64]> = chunk
                .iter()
                .map(|&i| train.samples[i].obs.as_slice())
                .collect();
            let a: Vec<&[f64]> = chunk.iter().map(|&i| acts[i].as_slice()).collect();
            let (loss, grads) = batch_loss(&policy, cfg.loss, &obs, &a)?;
            total += loss * chunk.len() as f64;
            opt.step(&mut params, &grads);
            policy.set_params(&params)?;
            // clamping of log_std feeds back into the optimizer's copy
            params = policy.params();
        }
        train_loss.push(total / train.len() as f64);
        if !val.is_empty() {
            val_loss.push(full_loss(&policy, cfg.loss, &val)?);
        }
    }
    Ok(BcResult {
        policy,
        initial_train_loss,
        train_loss,
        val_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::il::{Sample, SourceKind};
    use crate::nn::Mlp;
    use alloc::vec;

    /// Targets from a fixed linear map; a linear network can represent them exactly.
    fn linear_data(w: &[[f64; 3]; 2], n_traj: usize) -> ExpertDataset {
        let mut s = rng::stream(1, 2);
        let mut d = ExpertDataset::new();
        for t in 0..n_traj {
            for _ in 0..20 {
                let x: Vec<f64> = (0..3).map(|_| s.uniform_in(-1.0, 1.0)).collect();
                let y: Vec<f64> = w
                    .iter()
                    .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
                    .collect();
                d.samples.push(Sample {
                    obs: x,
                    action: y,
                    trajectory: t,
                    kind: SourceKind::Scripted,
                });
            }
        }
        d
    }

    const W: [[f64; 3]; 2] = [[0.5, -1.0, 0.25], [0.0, 0.3, -0.7]];

    #[test]
    fn learns_realizable_linear_policy() {
        let data = linear_data(&W, 20);
        let policy = GaussianPolicy::new(&[3, 2], 0.0, 1.0, 9).unwrap();
        let cfg = BcConfig {
            epochs: 200,
            batch_size: 32,
            lr: 1e-2,
            ..BcConfig::default()
        };
        let r = bc_train(&data, policy, &cfg).unwrap();
        assert_eq!(r.train_loss.len(), 200);
        assert!(
            *r.val_loss.last().unwrap() < 1e-3,
            "{:?}",
            r.val_loss.last()
        );
    }

    #[test]
    fn zero_initial_loss_at_generating_policy() {
        let data = linear_data(&W, 5);
        let mut params: Vec<f64> = W.iter().flatten().copied().collect();
        params.extend([0.0, 0.0]);
        let net = Mlp::from_params(&[3, 2], params).unwrap();
        let policy = GaussianPolicy::from_parts(net, vec![0.0; 2], 1.0).unwrap();
        let r = bc_train(
            &data,
            policy,
            &BcConfig {
                epochs: 0,
                ..BcConfig::default()
            },
        )
        .unwrap();
        assert!(r.initial_train_loss < 1e-24);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = linear_data(&W, 6);
        let cfg = BcConfig {
            epochs: 3,
            batch_size: 16,
            loss: LossKind::Nll,
            ..BcConfig::default()
        };
        let run = || {
            bc_train(
                &data,
                GaussianPolicy::new(&[3, 4, 2], 0.0, 1.0, 2).unwrap(),
                &cfg,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_mismatched_dims() {
        let data = linear_data(&W, 2);
        let policy = GaussianPolicy::new(&[4, 2], 0.0, 1.0, 0).unwrap();
        assert_eq!(
            bc_train(&data, policy, &BcConfig::default()).unwrap_err(),
            IlError::Dimension {
                expected: 4,
                got: 3
            }
        );
        let policy = GaussianPolicy::new(&[3, 2], 0.0, 1.0, 0).unwrap();
        assert_eq!(
            bc_train(&ExpertDataset::new(), policy, &BcConfig::default()).unwrap_err(),
            IlError::EmptyDataset
        );
    }
}
