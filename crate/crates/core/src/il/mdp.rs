use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::IlError;

/// Actions of the grid abstraction: up, down, left, right, stay.
pub const GRID_ACTIONS: usize = 5;

/// Finite MDP with a per-state reward. `transitions[(s * n_actions + a) * n_states + s2]`
/// is `T(s2 | s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<f64>,
    pub gamma: f64,
    pub reward: Option<Vec<f64>>,
}

impl GridMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        gamma: f64,
        reward: Option<Vec<f64>>,
    ) -> Result<Self, IlError> {
        let mdp = GridMdp {
            n_states,
            n_actions,
            transitions,
            gamma,
            reward,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// `width x height` grid, state `y * width + x`. The intended move happens
    /// with probability `1 - slip`; otherwise one of the five actions is taken
    /// uniformly at random. Moves into a wall leave the state unchanged.
    pub fn gridworld(width: usize, height: usize, slip: f64, gamma: f64) -> Result<Self, IlError> {
        if width == 0 || height == 0 {
            return Err(IlError::DegenerateGrid);
        }
        let n = width * height;
        let mut t = vec![0.0; n * GRID_ACTIONS * n];
        for s in 0..n {
            for a in 0..GRID_ACTIONS {
                for b in 0..GRID_ACTIONS {
                    let p = if a == b { 1.0 - slip } else { 0.0 } + slip / GRID_ACTIONS as f64;
                    let s2 = grid_move(s, b, width, height);
                    t[(s * GRID_ACTIONS + a) * n + s2] += p;
                }
            }
        }
        Self::new(n, GRID_ACTIONS, t, gamma, None)
    }

    pub fn with_reward(mut self, reward: Vec<f64>) -> Result<Self, IlError> {
        self.reward = Some(reward);
        self.validate()?;
        Ok(self)
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn validate(&self) -> Result<(), IlError> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(IlError::Config("empty state or action set".into()));
        }
        let expected = self.n_states * self.n_actions * self.n_states;
        if self.transitions.len() != expected {
            return Err(IlError::Dimension {
                expected,
                got: self.transitions.len(),
            });
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(IlError::Config(alloc::format!(
                "gamma {} outside [0, 1)",
                self.gamma
            )));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.row(s, a);
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(IlError::NotStochastic {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        if let Some(r) = &self.reward {
            if r.len() != self.n_states {
                return Err(IlError::Dimension {
                    expected: self.n_states,
                    got: r.len(),
                });
            }
        }
        Ok(())
    }

    /// `R(s) + gamma * sum_s2 T(s2|s,a) V(s2)` for every (s, a), row-major.
    pub fn q_values(&self, reward: &[f64], v: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_states * self.n_actions];
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let ev: f64 = self.row(s, a).iter().zip(v).map(|(p, v)| p * v).sum();
                q[s * self.n_actions + a] = reward[s] + self.gamma * ev;
            }
        }
        q
    }
}

/// Destination of a deterministic grid move; see [`GRID_ACTIONS`].
pub(crate) fn grid_move(s: usize, a: usize, width: usize, height: usize) -> usize {
    let (x, y) = (s % width, s / width);
    let (x, y) = match a {
        0 if y + 1 < height => (x, y + 1),
        1 if y > 0 => (x, y - 1),
        2 if x > 0 => (x - 1, y),
        3 if x + 1 < width => (x + 1, y),
        _ => (x, y),
    };
    y * width + x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    /// Greedy action per state; ties go to the lowest action index.
    pub policy: Vec<usize>,
    /// Action values, row-major by state.
    pub q: Vec<f64>,
    pub iterations: usize,
}

/// Bellman optimality iteration to a sup-norm change below 1e-8.
pub fn value_iteration(mdp: &GridMdp) -> Result<ValueIteration, IlError> {
    mdp.validate()?;
    let reward = mdp.reward.as_ref().ok_or(IlError::MissingReward)?;
    let na = mdp.n_actions;
    let mut v = vec![0.0; mdp.n_states];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let q = mdp.q_values(reward, &v);
        let next: Vec<f64> = (0..mdp.n_states)
            .map(|s| {
                q[s * na..(s + 1) * na]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < 1e-8 {
            break;
        }
    }
    let q = mdp.q_values(reward, &v);
    let policy = (0..mdp.n_states)
        .map(|s| {
            let row = &q[s * na..(s + 1) * na];
            let mut best = 0;
            for a in 1..na {
                if row[a] > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();
    Ok(ValueIteration {
        values: v,
        policy,
        q,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        let mdp = GridMdp::new(1, 1, vec![1.0], 0.9, Some(vec![1.0])).unwrap();
        let vi = value_iteration(&mdp).unwrap();
        assert!((vi.values[0] - 10.0).abs() < 1e-6, "{}", vi.values[0]);
    }

    #[test]
    fn zero_discount_gives_immediate_reward() {
        let r = vec![0.5, -1.0, 2.0, 0.0];
        let mdp = GridMdp::gridworld(2, 2, 0.1, 0.0)
            .unwrap()
            .with_reward(r.clone())
            .unwrap();
        assert_eq!(value_iteration(&mdp).unwrap().values, r);
    }

    #[test]
    fn missing_reward_and_bad_rows() {
        let mdp = GridMdp::gridworld(2, 2, 0.0, 0.9).unwrap();
        assert_eq!(value_iteration(&mdp).unwrap_err(), IlError::MissingReward);
        let err = GridMdp::new(2, 1, vec![0.5, 0.4, 0.0, 1.0], 0.9, None).unwrap_err();
        assert!(matches!(
            err,
            IlError::NotStochastic {
                state: 0,
                action: 0,
                ..
            }
        ));
        assert!(GridMdp::new(1, 1, vec![1.0], 1.0, None).is_err());
    }

    #[test]
    fn gridworld_rows_are_stochastic() {
        let mdp = GridMdp::gridworld(5, 5, 0.2, 0.9).unwrap();
        for s in 0..25 {
            for a in 0..GRID_ACTIONS {
                assert!((mdp.row(s, a).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        // corner: "down" and "left" both bounce
        assert!((mdp.row(0, 1)[0] - (0.8 + 3.0 * 0.04)).abs() < 1e-12);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let mdp = GridMdp::gridworld(3, 1, 0.0, 0.5)
            .unwrap()
            .with_reward(vec![0.0; 3])
            .unwrap();
        assert_eq!(value_iteration(&mdp).unwrap().policy, vec![0, 0, 0]);
    }
}
