use alloc::vec;
use alloc::vec::Vec;

use super::interactive::interactive_force_eval;
use super::{
    Angle, Bond, InteractiveForce, MdError, NonbondedKind, Restraint, Topology, F_MAX, MIN_DISTANCE,
};
use crate::math::{self, Vec3};

/// (2^(1/6))^2: squared LJ minimum in units of sigma^2.
const CBRT_2: f64 = 1.259_921_049_894_873_2;

/// Precomputed nonbonded pair with mixed (Lorentz-Berthelot) parameters.
#[derive(Debug, Clone, Copy)]
struct Pair {
    i: usize,
    j: usize,
    epsilon: f64,
    sigma2: f64,
    /// Squared cutoff; infinite for full LJ.
    cutoff2: f64,
    shift: f64,
}

/// Force field compiled from a [`Topology`] for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ForceField {
    n_atoms: usize,
    bonds: Vec<Bond>,
    angles: Vec<Angle>,
    restraints: Vec<Restraint>,
    pairs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceResult {
    /// Internal plus user forces, kJ/mol/nm.
    pub forces: Vec<Vec3>,
    /// Potential of the internal force field, kJ/mol.
    pub potential: f64,
    /// Interactive contribution only; zero on atoms no interaction touches.
    pub user_forces: Vec<Vec3>,
}

impl ForceField {
    pub fn new(topology: &Topology) -> Self {
        let pairs = topology
            .nonbonded_pairs()
            .into_iter()
            .filter_map(|(i, j)| {
                let (a, b) = (topology.lj[i], topology.lj[j]);
                let epsilon = math::sqrt(a.epsilon * b.epsilon);
                if epsilon == 0.0 {
                    return None;
                }
                let sigma = 0.5 * (a.sigma + b.sigma);
                let sigma2 = sigma * sigma;
                let (cutoff2, shift) = match topology.nonbonded {
                    NonbondedKind::LennardJones => (f64::INFINITY, 0.0),
                    // r_c = 2^(1/6) sigma, where U_LJ(r_c) = -epsilon
                    NonbondedKind::Repulsive => (CBRT_2 * sigma2, epsilon),
                };
                Some(Pair {
                    i,
                    j,
                    epsilon,
                    sigma2,
                    cutoff2,
                    shift,
                })
            })
            .collect();
        ForceField {
            n_atoms: topology.n_atoms(),
            bonds: topology.bonds.clone(),
            angles: topology.angles.clone(),
            restraints: topology.restraints.clone(),
            pairs,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Internal forces (written into `forces`, which is overwritten) and potential.
    pub fn internal(&self, positions: &[Vec3], forces: &mut [Vec3]) -> Result<f64, MdError> {
        debug_assert_eq!(positions.len(), self.n_atoms);
        forces.iter_mut().for_each(|f| *f = [0.0; 3]);
        let mut potential = 0.0;

        for b in &self.bonds {
            let d = math::sub(positions[b.i], positions[b.j]);
            let r = math::norm(d);
            if r < MIN_DISTANCE {
                return Err(MdError::Singularity { i: b.i, j: b.j, r });
            }
            let dr = r - b.r0;
            potential += 0.5 * b.k * dr * dr;
            let f = math::scale(d, -b.k * dr / r);
            apply_pair(forces, b.i, b.j, f);
        }

        for a in &self.angles {
            let u = math::sub(positions[a.i], positions[a.j]);
            let v = math::sub(positions[a.k], positions[a.j]);
            let (lu, lv) = (math::norm(u), math::norm(v));
            if lu < MIN_DISTANCE || lv < MIN_DISTANCE {
                let (i, r) = if lu < MIN_DISTANCE {
                    (a.i, lu)
                } else {
                    (a.k, lv)
                };
                return Err(MdError::Singularity { i, j: a.j, r });
            }
            let cos = (math::dot(u, v) / (lu * lv)).clamp(-1.0, 1.0);
            let theta = math::acos(cos);
            let dtheta = theta - a.theta0;
            potential += 0.5 * a.k_theta * dtheta * dtheta;
            let sin = math::sqrt(1.0 - cos * cos).max(1e-12);
            // F = k (theta - theta0) / sin(theta) * d cos(theta) / dr
            let c = a.k_theta * dtheta / sin;
            let fi = math::scale(
                math::sub(
                    math::scale(v, 1.0 / (lu * lv)),
                    math::scale(u, cos / (lu * lu)),
                ),
                c,
            );
            let fk = math::scale(
                math::sub(
                    math::scale(u, 1.0 / (lu * lv)),
                    math::scale(v, cos / (lv * lv)),
                ),
                c,
            );
            forces[a.i] = math::add(forces[a.i], fi);
            forces[a.k] = math::add(forces[a.k], fk);
            forces[a.j] = math::sub(forces[a.j], math::add(fi, fk));
        }

        for p in &self.pairs {
            let d = math::sub(positions[p.i], positions[p.j]);
            let r2 = math::norm2(d);
            if r2 < MIN_DISTANCE * MIN_DISTANCE {
                return Err(MdError::Singularity {
                    i: p.i,
                    j: p.j,
                    r: math::sqrt(r2),
                });
            }
            if r2 >= p.cutoff2 {
                continue;
            }
            let s2 = p.sigma2 / r2;
            let s6 = s2 * s2 * s2;
            let s12 = s6 * s6;
            potential += 4.0 * p.epsilon * (s12 - s6) + p.shift;
            // -dU/dr / r
            let ff = 24.0 * p.epsilon * (2.0 * s12 - s6) / r2;
            apply_pair(forces, p.i, p.j, math::scale(d, ff));
        }

        for rs in &self.restraints {
            let d = math::sub(positions[rs.atom], rs.anchor);
            potential += 0.5 * rs.k * math::norm2(d);
            forces[rs.atom] = math::sub(forces[rs.atom], math::scale(d, rs.k));
        }

        Ok(potential)
    }

    /// Potential energy only.
    pub fn potential(&self, positions: &[Vec3]) -> Result<f64, MdError> {
        let mut scratch = vec![[0.0; 3]; self.n_atoms];
        self.internal(positions, &mut scratch)
    }

    pub fn evaluate(
        &self,
        positions: &[Vec3],
        interactions: &[InteractiveForce],
    ) -> Result<ForceResult, MdError> {
        if positions.len() != self.n_atoms {
            return Err(MdError::AtomCount {
                expected: self.n_atoms,
                got: positions.len(),
            });
        }
        let mut forces = vec![[0.0; 3]; self.n_atoms];
        let potential = self.internal(positions, &mut forces)?;
        let user_forces = user_forces(interactions, positions)?;
        for (f, u) in forces.iter_mut().zip(&user_forces) {
            *f = math::add(*f, *u);
        }
        Ok(ForceResult {
            forces,
            potential,
            user_forces,
        })
    }
}

/// Sum of all interactions' per-atom forces, each atom's total clamped to `F_MAX`.
pub(crate) fn user_forces(
    interactions: &[InteractiveForce],
    positions: &[Vec3],
) -> Result<Vec<Vec3>, MdError> {
    let mut out = vec![[0.0; 3]; positions.len()];
    for it in interactions {
        it.validate(positions.len())?;
        for (o, f) in out.iter_mut().zip(interactive_force_eval(it, positions)) {
            *o = math::add(*o, f);
        }
    }
    if interactions.len() > 1 {
        out.iter_mut()
            .for_each(|f| *f = math::clamp_norm(*f, F_MAX));
    }
    Ok(out)
}

#[inline]
fn apply_pair(forces: &mut [Vec3], i: usize, j: usize, f: Vec3) {
    forces[i] = math::add(forces[i], f);
    forces[j] = math::sub(forces[j], f);
}

/// Forces, potential and user forces for one configuration.
pub fn compute_forces(
    topology: &Topology,
    positions: &[Vec3],
    interactions: &[InteractiveForce],
) -> Result<ForceResult, MdError> {
    ForceField::new(topology).evaluate(positions, interactions)
}
