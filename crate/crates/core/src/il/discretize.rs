use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{GridMdp, IlError, GRID_ACTIONS};
use crate::env::Trajectory;
use crate::math;
use crate::md::{tube_geometry, F_MAX};

/// Grid over the methane COM's (axial, radial) tube coordinates, read from
/// nanotube observations. Row = axial cell, column = radial cell, so the
/// grid actions "up"/"down" move along the axis and "right"/"left" move
/// away from/towards it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretizer {
    pub n_axial: usize,
    pub n_radial: usize,
    pub axial_min: f64,
    pub axial_max: f64,
    pub radial_max: f64,
    /// Actions weaker than this (kJ/mol/nm) map to "stay".
    pub stay_threshold: f64,
    pub gamma: f64,
    pub smoothing: f64,
}

impl Default for Discretizer {
    fn default() -> Self {
        let tube = tube_geometry();
        Discretizer {
            n_axial: 10,
            n_radial: 4,
            axial_min: tube.entrance() - 1.0,
            axial_max: tube.exit() + 0.5,
            radial_max: 0.6,
            stay_threshold: 0.05 * F_MAX,
            gamma: 0.9,
            smoothing: 0.01,
        }
    }
}

impl Discretizer {
    pub fn n_states(&self) -> usize {
        self.n_axial * self.n_radial
    }

    fn check(&self) -> Result<(), IlError> {
        if self.n_axial < 2 || self.n_radial < 2 {
            return Err(IlError::DegenerateGrid);
        }
        if !(self.axial_max > self.axial_min) || !(self.radial_max > 0.0) {
            return Err(IlError::Config("empty coordinate range".into()));
        }
        Ok(())
    }

    /// (axial, radial) cell of an observation; out-of-range values clamp to the boundary cells.
    pub fn cell(&self, obs: &[f64]) -> (usize, usize) {
        let bin = |x: f64, lo: f64, hi: f64, n: usize| -> usize {
            let f = math::floor((x - lo) / (hi - lo) * n as f64);
            if f.is_nan() || f < 0.0 {
                0
            } else {
                (f as usize).min(n - 1)
            }
        };
        let radial = math::sqrt(obs[0] * obs[0] + obs[1] * obs[1]);
        (
            bin(obs[2], self.axial_min, self.axial_max, self.n_axial),
            bin(radial, 0.0, self.radial_max, self.n_radial),
        )
    }

    pub fn state(&self, obs: &[f64]) -> usize {
        let (ia, ir) = self.cell(obs);
        ia * self.n_radial + ir
    }

    /// Dominant direction of a tube-frame action at the observed position.
    pub fn action(&self, obs: &[f64], action: &[f64]) -> usize {
        let a = [action[0], action[1], action[2]];
        if math::norm(a) < self.stay_threshold {
            return 4;
        }
        let r = math::sqrt(obs[0] * obs[0] + obs[1] * obs[1]);
        let a_radial = if r > 1e-9 {
            (a[0] * obs[0] + a[1] * obs[1]) / r
        } else {
            math::sqrt(a[0] * a[0] + a[1] * a[1])
        };
        if a[2].abs() >= a_radial.abs() {
            if a[2] > 0.0 {
                0
            } else {
                1
            }
        } else if a_radial > 0.0 {
            3
        } else {
            2
        }
    }
}

/// Cell sequence (including the final state) and grid actions of one episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteTrajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl DiscreteTrajectory {
    pub fn from_trajectory(t: &Trajectory, disc: &Discretizer) -> Self {
        let mut states: Vec<usize> = t.observations.iter().map(|o| disc.state(o)).collect();
        states.push(disc.state(&t.final_observation));
        let actions = t
            .observations
            .iter()
            .zip(&t.actions)
            .map(|(o, a)| disc.action(o, a))
            .collect();
        DiscreteTrajectory { states, actions }
    }
}

/// Grid MDP (no reward) with transitions estimated from counts plus
/// `disc.smoothing` on every successor, and the discrete expert paths.
pub fn discretize_task(
    trajectories: &[Trajectory],
    disc: &Discretizer,
) -> Result<(GridMdp, Vec<DiscreteTrajectory>), IlError> {
    disc.check()?;
    if trajectories.is_empty() {
        return Err(IlError::EmptyDataset);
    }
    let ns = disc.n_states();
    let mut counts = vec![disc.smoothing; ns * GRID_ACTIONS * ns];
    let discrete: Vec<DiscreteTrajectory> = trajectories
        .iter()
        .map(|t| DiscreteTrajectory::from_trajectory(t, disc))
        .collect();
    for d in &discrete {
        for (k, &a) in d.actions.iter().enumerate() {
            counts[(d.states[k] * GRID_ACTIONS + a) * ns + d.states[k + 1]] += 1.0;
        }
    }
    for row in counts.chunks_mut(ns) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|c| *c /= total);
    }
    let mdp = GridMdp::new(ns, GRID_ACTIONS, counts, disc.gamma, None)?;
    Ok((mdp, discrete))
}

/// Empirical distribution over (cell, grid action) pairs; index `s * n_actions + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEstimate {
    pub n_states: usize,
    pub n_actions: usize,
    pub probs: Vec<f64>,
    pub n_samples: usize,
}

impl OccupancyEstimate {
    /// L1 distance `sum |p - q|`.
    pub fn gap(&self, other: &OccupancyEstimate) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl OccupancyEstimate {
    /// Estimate from raw (observation, tube-frame action) pairs.
    pub fn from_pairs<'a, I>(pairs: I, disc: &Discretizer) -> Result<Self, IlError>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        disc.check()?;
        let ns = disc.n_states();
        let mut probs = vec![0.0; ns * GRID_ACTIONS];
        let mut n = 0;
        for (o, a) in pairs {
            probs[disc.state(o) * GRID_ACTIONS + disc.action(o, a)] += 1.0;
            n += 1;
        }
        if n == 0 {
            return Err(IlError::EmptyDataset);
        }
        probs.iter_mut().for_each(|p| *p /= n as f64);
        Ok(OccupancyEstimate {
            n_states: ns,
            n_actions: GRID_ACTIONS,
            probs,
            n_samples: n,
        })
    }
}

pub fn occupancy_estimate(
    trajectories: &[Trajectory],
    disc: &Discretizer,
) -> Result<OccupancyEstimate, IlError> {
    OccupancyEstimate::from_pairs(
        trajectories.iter().flat_map(|t| {
            t.observations
                .iter()
                .zip(&t.actions)
                .map(|(o, a)| (o.as_slice(), a.as_slice()))
        }),
        disc,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::TaskId;

    fn traj(points: &[[f64; 3]], actions: &[[f64; 3]]) -> Trajectory {
        let obs = |p: &[f64; 3]| vec![p[0], p[1], p[2], 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        Trajectory {
            task: TaskId::Nanotube,
            seed: 0,
            observations: points[..actions.len()].iter().map(obs).collect(),
            actions: actions.to_vec(),
            log_probs: vec![],
            costs: vec![],
            final_observation: obs(&points[actions.len()]),
            terminal: true,
            success: false,
        }
    }

    #[test]
    fn stationary_trajectory_concentrates_on_stay() {
        let p = [0.05, 0.0, -0.8];
        let t = traj(&[p; 21], &[[0.0; 3]; 20]);
        let disc = Discretizer::default();
        let (mdp, d) = discretize_task(&[t], &disc).unwrap();
        let s = disc.state(&p);
        assert!(d[0].actions.iter().all(|&a| a == 4));
        assert!(mdp.row(s, 4)[s] > 0.9);
        for s in 0..mdp.n_states {
            for a in 0..GRID_ACTIONS {
                assert!((mdp.row(s, a).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn clamps_and_classifies() {
        let disc = Discretizer::default();
        assert_eq!(disc.cell(&[5.0, 0.0, -50.0]), (0, disc.n_radial - 1));
        assert_eq!(disc.cell(&[0.0, 0.0, 50.0]), (disc.n_axial - 1, 0));
        let o = [0.1, 0.0, 0.0];
        assert_eq!(disc.action(&o, &[0.0, 0.0, 500.0]), 0);
        assert_eq!(disc.action(&o, &[0.0, 0.0, -500.0]), 1);
        assert_eq!(disc.action(&o, &[-500.0, 0.0, 100.0]), 2);
        assert_eq!(disc.action(&o, &[500.0, 0.0, 100.0]), 3);
        assert_eq!(disc.action(&o, &[1.0, 1.0, 1.0]), 4);
    }

    #[test]
    fn degenerate_grid_rejected() {
        let t = traj(&[[0.0; 3]; 2], &[[0.0; 3]]);
        let disc = Discretizer {
            n_radial: 1,
            ..Discretizer::default()
        };
        assert_eq!(
            discretize_task(&[t], &disc).unwrap_err(),
            IlError::DegenerateGrid
        );
    }

    #[test]
    fn single_step_occupancy_is_a_point_mass() {
        let t = traj(&[[0.0, 0.0, -0.8], [0.0, 0.0, -0.7]], &[[0.0, 0.0, 800.0]]);
        let disc = Discretizer::default();
        let occ = occupancy_estimate(&[t], &disc).unwrap();
        let k = disc.state(&[0.0, 0.0, -0.8]) * GRID_ACTIONS;
        assert_eq!(occ.probs[k], 1.0);
        assert_eq!(occ.probs.iter().sum::<f64>(), 1.0);
    }
}
