use alloc::vec::Vec;

use super::IlError;
use crate::env::{rollout, Policy, TaskConfig};
use crate::md::TaskId;

/// One-sided sign test: probability of at least `wins` successes out of
/// `wins + losses` fair coin flips. Ties are dropped by the caller.
pub fn sign_test_one_sided(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // binomial(n, k) / 2^n built up in log space
    let mut log_fact = Vec::with_capacity(n + 1);
    log_fact.push(0.0);
    for k in 1..=n {
        log_fact.push(log_fact[k - 1] + crate::math::ln(k as f64));
    }
    let ln2 = core::f64::consts::LN_2;
    (wins..=n)
        .map(|k| crate::math::exp(log_fact[n] - log_fact[k] - log_fact[n - k] - n as f64 * ln2))
        .sum::<f64>()
        .min(1.0)
}

/// Success flag per seed for a policy rolled out with the task's step budget.
pub fn evaluate_success<P: Policy + ?Sized>(
    policy: &mut P,
    task: TaskId,
    seeds: &[u64],
    cfg: TaskConfig,
) -> Result<Vec<bool>, IlError> {
    seeds
        .iter()
        .map(|&s| Ok(rollout(policy, task, s, cfg.step_budget.max(1), cfg, None)?.success))
        .collect()
}
