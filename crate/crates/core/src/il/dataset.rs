use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::IlError;
use crate::env::Trajectory;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Scripted,
    Human,
}

/// One demonstrated (observation, action) pair; actions are in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub trajectory: usize,
    pub kind: SourceKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpertDataset {
    pub samples: Vec<Sample>,
}

impl ExpertDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_trajectories(trajectories: &[Trajectory], kind: SourceKind) -> Self {
        let mut d = Self::new();
        for t in trajectories {
            d.push_trajectory(t, kind);
        }
        d
    }

    /// Appends all pairs of `t` under a fresh trajectory id and returns that id.
    pub fn push_trajectory(&mut self, t: &Trajectory, kind: SourceKind) -> usize {
        let id = self.next_id();
        for (o, a) in t.observations.iter().zip(&t.actions) {
            self.samples.push(Sample {
                obs: o.clone(),
                action: a.to_vec(),
                trajectory: id,
                kind,
            });
        }
        id
    }

    pub fn next_id(&self) -> usize {
        self.samples
            .iter()
            .map(|s| s.trajectory + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trajectory_ids(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| s.trajectory)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Observation and action widths, checked across all samples.
    pub fn dims(&self) -> Result<(usize, usize), IlError> {
        let first = self.samples.first().ok_or(IlError::EmptyDataset)?;
        let (o, a) = (first.obs.len(), first.action.len());
        for s in &self.samples {
            if s.obs.len() != o {
                return Err(IlError::Dimension {
                    expected: o,
                    got: s.obs.len(),
                });
            }
            if s.action.len() != a {
                return Err(IlError::Dimension {
                    expected: a,
                    got: s.action.len(),
                });
            }
        }
        Ok((o, a))
    }

    /// Splits whole trajectories: a seeded shuffle of the ids puts
    /// `ceil(val_fraction * n_ids)` of them in validation, but never all of them.
    pub fn split_by_trajectory(
        &self,
        val_fraction: f64,
        seed: u64,
    ) -> (ExpertDataset, ExpertDataset) {
        let mut ids = self.trajectory_ids();
        rng::stream(seed, 0x5B17).shuffle(&mut ids);
        let n_val = (crate::math::ceil(val_fraction * ids.len() as f64) as usize)
            .min(ids.len().saturating_sub(1));
        let val_ids: BTreeSet<usize> = ids[..n_val].iter().copied().collect();
        let (mut train, mut val) = (Self::new(), Self::new());
        for s in &self.samples {
            if val_ids.contains(&s.trajectory) {
                val.samples.push(s.clone());
            } else {
                train.samples.push(s.clone());
            }
        }
        (train, val)
    }

    pub fn extend(&mut self, other: &ExpertDataset) {
        let offset = self.next_id();
        for s in &other.samples {
            let mut s = s.clone();
            s.trajectory += offset;
            self.samples.push(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy(n_traj: usize, len: usize) -> ExpertDataset {
        let mut d = ExpertDataset::new();
        for t in 0..n_traj {
            for k in 0..len {
                d.samples.push(Sample {
                    obs: vec![t as f64, k as f64],
                    action: vec![0.0],
                    trajectory: t,
                    kind: SourceKind::Scripted,
                });
            }
        }
        d
    }

    #[test]
    fn split_keeps_trajectories_whole() {
        let d = toy(20, 5);
        let (train, val) = d.split_by_trajectory(0.1, 3);
        assert_eq!(val.trajectory_ids().len(), 2);
        assert_eq!(train.len() + val.len(), 100);
        for id in val.trajectory_ids() {
            assert!(!train.trajectory_ids().contains(&id));
        }
        assert_eq!(d.split_by_trajectory(0.1, 3), (train, val));
    }

    #[test]
    fn single_trajectory_stays_in_training() {
        let (train, val) = toy(1, 4).split_by_trajectory(0.1, 0);
        assert_eq!(train.len(), 4);
        assert!(val.is_empty());
    }

    #[test]
    fn extend_renumbers_ids() {
        let mut a = toy(2, 1);
        a.extend(&toy(3, 1));
        assert_eq!(a.trajectory_ids(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn dims_checks_consistency() {
        let mut d = toy(2, 2);
        assert_eq!(d.dims(), Ok((2, 1)));
        d.samples[3].obs.push(1.0);
        assert_eq!(
            d.dims(),
            Err(IlError::Dimension {
                expected: 2,
                got: 3
            })
        );
        assert_eq!(ExpertDataset::new().dims(), Err(IlError::EmptyDataset));
    }
}
