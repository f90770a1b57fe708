use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    Angle, Bond, LjParams, MdError, NonbondedKind, Restraint, SimState, Topology, BOLTZMANN,
};
use crate::math::{self, Vec3};
use crate::rng;

pub const TUBE_RINGS: usize = 6;
pub const RING_SIZE: usize = 10;
pub const TUBE_CARBONS: usize = TUBE_RINGS * RING_SIZE;
pub const NANOTUBE_ATOMS: usize = TUBE_CARBONS + 5;
/// Index of the methane carbon (C61).
pub const METHANE_CARBON: usize = TUBE_CARBONS;
pub const ALANINE_BEADS: usize = 17;

const TUBE_RADIUS: f64 = 0.35;
const RING_SPACING: f64 = 0.123;
const TUBE_RESTRAINT_K: f64 = 1.0e5;
/// Tube center in the lab frame (nm); the tube axis is the lab z axis.
const TUBE_CENTER: Vec3 = [12.0, 15.0, 13.0];
/// Methane starts on the axis this far (nm) below the entrance plane.
const METHANE_OFFSET: f64 = 0.6;

const MASS_C: f64 = 12.011;
const MASS_H: f64 = 1.008;
const CH_LENGTH: f64 = 0.109;
const CH_K: f64 = 1.0e4;
const HCH_ANGLE: f64 = 1.910_633_236_249_018_6; // acos(-1/3)
const HCH_K: f64 = 100.0;
const LJ_TUBE: LjParams = LjParams {
    epsilon: 0.36,
    sigma: 0.34,
};
const LJ_METHANE_C: LjParams = LjParams {
    epsilon: 0.46,
    sigma: 0.34,
};
const LJ_METHANE_H: LjParams = LjParams {
    epsilon: 0.06,
    sigma: 0.25,
};

const BEAD_MASS: f64 = 71.08;
const BEAD_BOND: f64 = 0.38;
const BEAD_BOND_K: f64 = 1.0e4;
const BEAD_ANGLE: f64 = 2.0;
const BEAD_ANGLE_K: f64 = 20.0;
const BEAD_LJ: LjParams = LjParams {
    epsilon: 1.0,
    sigma: 0.45,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Nanotube,
    Alanine17,
}

impl TaskId {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Nanotube => "nanotube",
            TaskId::Alanine17 => "alanine17",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = MdError;

    fn from_str(s: &str) -> Result<Self, MdError> {
        match s {
            "nanotube" => Ok(TaskId::Nanotube),
            "alanine17" => Ok(TaskId::Alanine17),
            other => Err(MdError::UnsupportedTask(other.to_string())),
        }
    }
}

/// Where the tube sits: its center, orthonormal axes (the third is the tube
/// axis, pointing from entrance to exit) and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeGeometry {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub radius: f64,
    pub half_length: f64,
}

impl TubeGeometry {
    /// Lab-frame vector expressed in tube axes.
    pub fn to_tube(&self, v: Vec3) -> Vec3 {
        [
            math::dot(self.axes[0], v),
            math::dot(self.axes[1], v),
            math::dot(self.axes[2], v),
        ]
    }

    /// Tube-frame vector expressed in lab axes.
    pub fn to_lab(&self, v: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (k, axis) in self.axes.iter().enumerate() {
            out = math::add(out, math::scale(*axis, v[k]));
        }
        out
    }

    /// Lab point in tube coordinates (relative to the center).
    pub fn point_to_tube(&self, p: Vec3) -> Vec3 {
        self.to_tube(math::sub(p, self.center))
    }

    pub fn point_to_lab(&self, p: Vec3) -> Vec3 {
        math::add(self.center, self.to_lab(p))
    }

    /// Axial coordinate of the entrance plane (tube frame).
    pub fn entrance(&self) -> f64 {
        -self.half_length
    }

    pub fn exit(&self) -> f64 {
        self.half_length
    }
}

/// Geometry of the nanotube produced by [`build_system`].
pub fn tube_geometry() -> TubeGeometry {
    TubeGeometry {
        center: TUBE_CENTER,
        axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        radius: TUBE_RADIUS,
        half_length: 0.5 * RING_SPACING * (TUBE_RINGS - 1) as f64,
    }
}

pub fn methane_indices() -> [usize; 5] {
    [
        METHANE_CARBON,
        METHANE_CARBON + 1,
        METHANE_CARBON + 2,
        METHANE_CARBON + 3,
        METHANE_CARBON + 4,
    ]
}

/// Builds a benchmark system at 300 K.
pub fn build_system(task: &str, seed: u64) -> Result<(Topology, SimState), MdError> {
    build_system_at(task.parse()?, seed, super::DEFAULT_TEMPERATURE)
}

/// Builds a benchmark system with Maxwell-Boltzmann velocities at `temperature`,
/// drawn from a stream keyed by `seed`.
pub fn build_system_at(
    task: TaskId,
    seed: u64,
    temperature: f64,
) -> Result<(Topology, SimState), MdError> {
    let (topology, positions) = match task {
        TaskId::Nanotube => nanotube(),
        TaskId::Alanine17 => alanine17(),
    };
    topology.validate()?;
    let mut stream = rng::stream(seed, 0xB017);
    let velocities = topology
        .masses
        .iter()
        .map(|m| math::scale(stream.normal3(), math::sqrt(BOLTZMANN * temperature / m)))
        .collect();
    let state = SimState {
        positions,
        velocities,
        time: 0.0,
        step: 0,
    };
    Ok((topology, state))
}

fn nanotube() -> (Topology, Vec<Vec3>) {
    let geom = tube_geometry();
    let mut names: Vec<String> = Vec::with_capacity(NANOTUBE_ATOMS);
    let mut masses = Vec::with_capacity(NANOTUBE_ATOMS);
    let mut lj = Vec::with_capacity(NANOTUBE_ATOMS);
    let mut positions = Vec::with_capacity(NANOTUBE_ATOMS);
    let mut restraints = Vec::with_capacity(TUBE_CARBONS);
    let mut exclusions = BTreeSet::new();

    for ring in 0..TUBE_RINGS {
        let z = -geom.half_length + RING_SPACING * ring as f64;
        // alternate rings are rotated by half a step (zigzag)
        let phase = if ring % 2 == 1 {
            PI / RING_SIZE as f64
        } else {
            0.0
        };
        for m in 0..RING_SIZE {
            let phi = phase + 2.0 * PI * m as f64 / RING_SIZE as f64;
            let local = [
                TUBE_RADIUS * math::cos(phi),
                TUBE_RADIUS * math::sin(phi),
                z,
            ];
            let p = geom.point_to_lab(local);
            let idx = positions.len();
            names.push(format!("C{}", idx + 1));
            masses.push(MASS_C);
            lj.push(LJ_TUBE);
            positions.push(p);
            restraints.push(Restraint {
                atom: idx,
                anchor: p,
                k: TUBE_RESTRAINT_K,
            });
        }
    }
    for i in 0..TUBE_CARBONS {
        for j in (i + 1)..TUBE_CARBONS {
            exclusions.insert((i, j));
        }
    }

    let c = METHANE_CARBON;
    let start = geom.point_to_lab([0.0, 0.0, geom.entrance() - METHANE_OFFSET]);
    names.push("C61".into());
    masses.push(MASS_C);
    lj.push(LJ_METHANE_C);
    positions.push(start);
    let s = CH_LENGTH / math::sqrt(3.0);
    let dirs = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let mut bonds = Vec::new();
    for (h, d) in dirs.iter().enumerate() {
        names.push(format!("H{}", h + 1));
        masses.push(MASS_H);
        lj.push(LJ_METHANE_H);
        positions.push(math::add(start, math::scale(*d, s)));
        bonds.push(Bond {
            i: c,
            j: c + 1 + h,
            k: CH_K,
            r0: CH_LENGTH,
        });
    }
    let mut angles = Vec::new();
    for a in 1..=4 {
        exclusions.insert((c, c + a));
        for b in (a + 1)..=4 {
            angles.push(Angle {
                i: c + a,
                j: c,
                k: c + b,
                k_theta: HCH_K,
                theta0: HCH_ANGLE,
            });
            exclusions.insert((c + a, c + b));
        }
    }

    let topology = Topology {
        atom_names: names,
        masses,
        bonds,
        angles,
        lj,
        restraints,
        exclusions,
        nonbonded: NonbondedKind::LennardJones,
    };
    (topology, positions)
}

fn alanine17() -> (Topology, Vec<Vec3>) {
    let n = ALANINE_BEADS;
    // planar zigzag along x with every bond angle at its rest value
    let half = 0.5 * BEAD_ANGLE;
    let dx = BEAD_BOND * math::sin(half);
    let dy = BEAD_BOND * math::cos(half);
    let x0 = TUBE_CENTER[0] - 0.5 * dx * (n - 1) as f64;
    let positions: Vec<Vec3> = (0..n)
        .map(|i| {
            let y = if i % 2 == 0 { 0.0 } else { dy };
            [x0 + dx * i as f64, TUBE_CENTER[1] + y, TUBE_CENTER[2]]
        })
        .collect();
    let mut exclusions = BTreeSet::new();
    let bonds: Vec<Bond> = (0..n - 1)
        .map(|i| {
            exclusions.insert((i, i + 1));
            Bond {
                i,
                j: i + 1,
                k: BEAD_BOND_K,
                r0: BEAD_BOND,
            }
        })
        .collect();
    let angles: Vec<Angle> = (0..n - 2)
        .map(|i| {
            exclusions.insert((i, i + 2));
            Angle {
                i,
                j: i + 1,
                k: i + 2,
                k_theta: BEAD_ANGLE_K,
                theta0: BEAD_ANGLE,
            }
        })
        .collect();
    let topology = Topology {
        atom_names: (1..=n).map(|i| format!("CA{i}")).collect(),
        masses: alloc::vec![BEAD_MASS; n],
        bonds,
        angles,
        lj: alloc::vec![BEAD_LJ; n],
        restraints: Vec::new(),
        exclusions,
        nonbonded: NonbondedKind::Repulsive,
    };
    (topology, positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nanotube_has_c61_and_h4_labels() {
        let (top, state) = build_system("nanotube", 3).unwrap();
        assert_eq!(top.n_atoms(), 65);
        assert_eq!(state.n_atoms(), 65);
        let expected: Vec<String> = (1..=61)
            .map(|i| format!("C{i}"))
            .chain((1..=4).map(|i| format!("H{i}")))
            .collect();
        assert_eq!(top.atom_names, expected);
        assert_eq!(top.restraints.len(), 60);
        assert!(top.restraints.iter().all(|r| r.atom < 60));
    }

    #[test]
    fn alanine_chain_shape() {
        let (top, _) = build_system("alanine17", 0).unwrap();
        assert_eq!(top.n_atoms(), 17);
        assert_eq!(top.bonds.len(), 16);
        assert_eq!(top.angles.len(), 15);
    }

    #[test]
    fn unknown_task_is_rejected() {
        assert_eq!(
            build_system("protein", 0).unwrap_err(),
            MdError::UnsupportedTask("protein".into())
        );
    }

    #[test]
    fn builds_are_deterministic_per_seed() {
        let a = build_system("nanotube", 9).unwrap();
        let b = build_system("nanotube", 9).unwrap();
        let c = build_system("nanotube", 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.positions, c.1.positions);
        assert_ne!(a.1.velocities, c.1.velocities);
    }

    #[test]
    fn tube_frame_round_trips() {
        let g = tube_geometry();
        let p = [1.0, -2.0, 0.5];
        let back = g.point_to_tube(g.point_to_lab(p));
        assert!(math::norm(math::sub(p, back)) < 1e-12);
    }
}
