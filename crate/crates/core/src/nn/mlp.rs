use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::NnError;
use crate::math;
use crate::rng;

/// Fully connected network: tanh on hidden layers, linear output.
///
/// Parameters live in one flat vector; layer `l` stores its row-major
/// `out x in` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations from a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the input, the last entry is the output.
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

impl Mlp {
    /// Glorot-uniform weights (±sqrt(6 / (fan_in + fan_out))) from `seed`, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes)?;
        let mut s = rng::stream(seed, 0x3317);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = s.uniform_in(-limit, limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::Architecture(alloc::format!("{sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        })
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(NnError::Dimension {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            x = self.layer(offset, w[0], w[1], &x, l < last);
            offset += w[0] * w[1] + w[1];
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace, NnError> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let next = self.layer(offset, w[0], w[1], activations.last().unwrap(), l < last);
            activations.push(next);
            offset += w[0] * w[1] + w[1];
        }
        Ok(Trace { activations })
    }

    fn layer(&self, offset: usize, n_in: usize, n_out: usize, x: &[f64], hidden: bool) -> Vec<f64> {
        let w = &self.params[offset..offset + n_in * n_out];
        let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        (0..n_out)
            .map(|o| {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                if hidden {
                    math::tanh(z)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Reverse-mode pass: adds `d loss / d params` into `grads` and returns `d loss / d input`.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grads: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grads.len(), self.params.len());
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        // gradient w.r.t. the pre-activation of the current layer
        let mut delta = grad_output.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &trace.activations[l];
            let offset = offsets[l];
            let w = &self.params[offset..offset + n_in * n_out];
            let (gw, gb) = grads[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut dx = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * x[i];
                    dx[i] += d * row[i];
                }
            }
            if l > 0 {
                // x is tanh(z) of the previous layer
                for (g, a) in dx.iter_mut().zip(x) {
                    *g *= 1.0 - a * a;
                }
            }
            delta = dx;
        }
        delta
    }

    /// Batch-mean loss and parameter gradient for a per-sample loss given as
    /// `(loss, d loss / d output)` of the network output.
    pub fn loss_grad<I, F>(
        &self,
        inputs: &[I],
        mut per_sample: F,
    ) -> Result<(f64, Vec<f64>), NnError>
    where
        I: AsRef<[f64]>,
        F: FnMut(usize, &[f64]) -> (f64, Vec<f64>),
    {
        if inputs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut total = 0.0;
        for (k, input) in inputs.iter().enumerate() {
            let trace = self.forward_trace(input.as_ref())?;
            let (loss, g) = per_sample(k, trace.output());
            if !loss.is_finite() {
                return Err(NnError::NonFinite { sample: k });
            }
            total += loss;
            self.backward(&trace, &g, &mut grads);
        }
        let inv = 1.0 / inputs.len() as f64;
        grads.iter_mut().for_each(|g| *g *= inv);
        Ok((total * inv, grads))
    }

    /// Mean over the batch of `||f(x) - y||^2`.
    pub fn mse_grad<I: AsRef<[f64]>, T: AsRef<[f64]>>(
        &self,
        inputs: &[I],
        targets: &[T],
    ) -> Result<(f64, Vec<f64>), NnError> {
        if targets.len() != inputs.len() {
            return Err(NnError::Dimension {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        for t in targets {
            if t.as_ref().len() != self.output_dim() {
                return Err(NnError::Dimension {
                    expected: self.output_dim(),
                    got: t.as_ref().len(),
                });
            }
        }
        self.loss_grad(inputs, |k, out| {
            let t = targets[k].as_ref();
            let diff: Vec<f64> = out.iter().zip(t).map(|(o, t)| o - t).collect();
            let loss = diff.iter().map(|d| d * d).sum();
            (loss, diff.iter().map(|d| 2.0 * d).collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_layer() {
        let mut net = Mlp::zeros(&[3, 3]).unwrap();
        for i in 0..3 {
            net.params_mut()[i * 3 + i] = 1.0;
        }
        let x = [0.25, -1.5, 7.0];
        assert_eq!(net.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn rejects_wrong_input_width() {
        let net = Mlp::new(&[9, 4, 3], 0).unwrap();
        assert_eq!(
            net.forward(&[0.0; 8]),
            Err(NnError::Dimension {
                expected: 9,
                got: 8
            })
        );
        assert!(Mlp::zeros(&[3]).is_err());
        assert!(Mlp::zeros(&[3, 0, 2]).is_err());
    }

    #[test]
    fn mse_at_target_is_zero() {
        let net = Mlp::new(&[2, 5, 2], 4).unwrap();
        let xs = [vec![0.1, 0.2], vec![-0.3, 0.9]];
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
        let (loss, g) = net.mse_grad(&xs, &ys).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_batch_and_non_finite_loss() {
        let net = Mlp::new(&[2, 2], 0).unwrap();
        let empty: [Vec<f64>; 0] = [];
        assert_eq!(net.mse_grad(&empty, &empty), Err(NnError::EmptyBatch));
        let r = net.loss_grad(&[[0.0, 0.0], [1.0, 1.0]], |k, _| {
            (if k == 1 { f64::NAN } else { 0.0 }, vec![0.0; 2])
        });
        assert_eq!(r, Err(NnError::NonFinite { sample: 1 }));
    }

    #[test]
    fn init_respects_glorot_bound() {
        let net = Mlp::new(&[9, 64, 3], 7).unwrap();
        let limit = math::sqrt(6.0 / 73.0);
        assert!(net.params()[..9 * 64].iter().all(|p| p.abs() <= limit));
        assert!(net.params()[9 * 64..9 * 64 + 64].iter().all(|p| *p == 0.0));
        assert_eq!(net, Mlp::new(&[9, 64, 3], 7).unwrap());
    }
}
