use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MdError;
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// kJ/mol/nm²
    pub k: f64,
    /// nm
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub i: usize,
    /// Vertex atom.
    pub j: usize,
    pub k: usize,
    /// kJ/mol/rad²
    pub k_theta: f64,
    /// rad
    pub theta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjParams {
    /// kJ/mol
    pub epsilon: f64,
    /// nm
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Restraint {
    pub atom: usize,
    pub anchor: Vec3,
    /// kJ/mol/nm²
    pub k: f64,
}

/// How non-excluded atom pairs interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonbondedKind {
    /// Full 12-6 Lennard-Jones, no cutoff.
    LennardJones,
    /// Lennard-Jones truncated at its minimum and shifted up by ε (purely repulsive).
    Repulsive,
}

/// Static description of a molecular system. Units: nm, amu, kJ/mol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub atom_names: Vec<String>,
    pub masses: Vec<f64>,
    pub bonds: Vec<Bond>,
    pub angles: Vec<Angle>,
    pub lj: Vec<LjParams>,
    pub restraints: Vec<Restraint>,
    /// Excluded pairs, stored with `i < j`.
    pub exclusions: BTreeSet<(usize, usize)>,
    pub nonbonded: NonbondedKind,
}

impl Topology {
    pub fn n_atoms(&self) -> usize {
        self.masses.len()
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atom_names.iter().position(|n| n == name)
    }

    pub fn is_excluded(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.exclusions.contains(&key)
    }

    pub fn exclude(&mut self, i: usize, j: usize) {
        let key = if i < j { (i, j) } else { (j, i) };
        self.exclusions.insert(key);
    }

    /// Pairs that get a nonbonded term, in a fixed order.
    pub fn nonbonded_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_atoms();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.is_excluded(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    pub fn validate(&self) -> Result<(), MdError> {
        let n = self.n_atoms();
        let bad = |what: String| Err(MdError::InvalidTopology(what));
        if self.atom_names.len() != n || self.lj.len() != n {
            return bad(alloc::format!(
                "per-atom arrays disagree: {} names, {} masses, {} lj",
                self.atom_names.len(),
                n,
                self.lj.len()
            ));
        }
        let unique: BTreeSet<&String> = self.atom_names.iter().collect();
        if unique.len() != n {
            return bad("atom names are not unique".into());
        }
        if let Some(i) = self
            .masses
            .iter()
            .position(|&m| !(m > 0.0 && m.is_finite()))
        {
            return bad(alloc::format!("mass of atom {i} is not positive"));
        }
        for (a, p) in self.lj.iter().enumerate() {
            if !(p.epsilon >= 0.0 && p.sigma > 0.0) {
                return bad(alloc::format!("bad LJ parameters on atom {a}"));
            }
        }
        for b in &self.bonds {
            if b.i >= n || b.j >= n || b.i == b.j || !(b.k >= 0.0) {
                return bad(alloc::format!("bad bond {}-{}", b.i, b.j));
            }
            if !self.is_excluded(b.i, b.j) {
                return bad(alloc::format!(
                    "bonded pair {}-{} is not excluded",
                    b.i,
                    b.j
                ));
            }
        }
        for a in &self.angles {
            if a.i >= n || a.j >= n || a.k >= n || !(a.k_theta >= 0.0) {
                return bad(alloc::format!("bad angle {}-{}-{}", a.i, a.j, a.k));
            }
        }
        for r in &self.restraints {
            if r.atom >= n || !(r.k >= 0.0) {
                return bad(alloc::format!("bad restraint on atom {}", r.atom));
            }
        }
        if self.exclusions.iter().any(|&(i, j)| i >= n || j >= n) {
            return bad("exclusion index out of range".into());
        }
        Ok(())
    }
}
