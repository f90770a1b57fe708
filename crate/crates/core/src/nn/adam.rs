use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        OptimState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Gradient-descent step on `params`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let c1 = 1.0 - math::powi(self.beta1, self.t.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - math::powi(self.beta2, self.t.min(i32::MAX as u64) as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut opt = OptimState::new(3, 0.1);
        opt.step(&mut p, &[0.0; 3]);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut p = vec![0.0; 3];
        let mut opt = OptimState::new(3, 0.01);
        opt.step(&mut p, &[4.0, -0.5, 1e-3]);
        for (x, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 0.01).abs() < 1e-6, "{x}");
        }
    }

    /// Convex quadratic 0.5 * sum(a_i x_i^2): after a short warmup the loss
    /// falls monotonically and ends below 1e-4 of where it started.
    #[test]
    fn converges_on_convex_quadratic() {
        let a = [1.0, 3.0, 10.0];
        let loss = |x: &[f64]| 0.5 * x.iter().zip(a).map(|(x, a)| a * x * x).sum::<f64>();
        let mut x = vec![1.0, -1.0, 0.5];
        let l0 = loss(&x);
        let mut opt = OptimState::new(3, 0.05);
        let mut history = Vec::new();
        for _ in 0..200 {
            let g: Vec<f64> = x.iter().zip(a).map(|(x, a)| a * x).collect();
            opt.step(&mut x, &g);
            history.push(loss(&x));
        }
        assert!(
            *history.last().unwrap() < 1e-4 * l0,
            "final {}",
            history.last().unwrap()
        );
        let best_after_warmup = history[..20].iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(history[20..]
            .iter()
            .all(|l| *l <= best_after_warmup * 1.0001));
    }
}
