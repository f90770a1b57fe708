//! Minimal molecular dynamics: force field, velocity Verlet with an optional
//! Langevin thermostat, and user-applied interactive forces.
//!
//! Units throughout are nm, ps, amu and kJ/mol, so forces are kJ/mol/nm and
//! `amu·nm²/ps²` is exactly one kJ/mol.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

mod builders;
mod forces;
mod integrate;
mod interactive;
mod topology;

pub use builders::{
    build_system, build_system_at, methane_indices, tube_geometry, TaskId, TubeGeometry,
    ALANINE_BEADS, METHANE_CARBON, NANOTUBE_ATOMS, TUBE_CARBONS,
};
pub use forces::{compute_forces, ForceField, ForceResult};
pub use integrate::{integrate_step, kinetic_energy, total_energy, Simulation, Thermostat};
pub use interactive::{interactive_force_eval, well_potential, InteractionMode, InteractiveForce};
pub use topology::{Angle, Bond, LjParams, NonbondedKind, Restraint, Topology};

/// Boltzmann constant in kJ/mol/K.
pub const BOLTZMANN: f64 = 0.008_314_462_618;
/// Per-atom cap on user-applied force, kJ/mol/nm.
pub const F_MAX: f64 = 1.0e3;
/// Force of a constant-pull interaction at `scale == 1`, kJ/mol/nm.
pub const F_UNIT: f64 = 10.0;
pub const DEFAULT_DT: f64 = 0.001;
pub const DEFAULT_TEMPERATURE: f64 = 300.0;
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Pairs closer than this (nm) are treated as a singularity.
pub const MIN_DISTANCE: f64 = 1.0e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MdError {
    #[error("unsupported task `{0}`")]
    UnsupportedTask(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),
    #[error("atoms {i} and {j} overlap (r = {r:e} nm)")]
    Singularity { i: usize, j: usize, r: f64 },
    #[error("simulation diverged at step {step}: non-finite position on atom {atom}")]
    Divergence { step: u64, atom: usize },
    #[error("state has {got} atoms, topology has {expected}")]
    AtomCount { expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
}

/// Dynamic state of a simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// nm
    pub positions: Vec<Vec3>,
    /// nm/ps
    pub velocities: Vec<Vec3>,
    /// ps
    pub time: f64,
    pub step: u64,
}

impl SimState {
    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn is_finite(&self) -> bool {
        self.positions
            .iter()
            .chain(self.velocities.iter())
            .all(|v| crate::math::is_finite3(*v))
            && self.time.is_finite()
    }
}
