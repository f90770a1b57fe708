use alloc::vec::Vec;

use crate::math::{self, Vec3};
use crate::md::{methane_indices, SimState, Topology, TubeGeometry, ALANINE_BEADS};

pub const NANOTUBE_OBS_DIM: usize = 9;
pub const ALANINE_OBS_DIM: usize = 12;

/// Mass-weighted center of the methane: `(position, velocity)` in the lab frame.
pub fn methane_com(topology: &Topology, state: &SimState) -> (Vec3, Vec3) {
    let mut m_tot = 0.0;
    let mut x = [0.0; 3];
    let mut v = [0.0; 3];
    for &i in &methane_indices() {
        let m = topology.masses[i];
        m_tot += m;
        x = math::add(x, math::scale(state.positions[i], m));
        v = math::add(v, math::scale(state.velocities[i], m));
    }
    (math::scale(x, 1.0 / m_tot), math::scale(v, 1.0 / m_tot))
}

/// `[COM position, COM velocity, unit vector toward the entrance center]`, all in the tube frame.
pub fn nanotube_observation(
    tube: &TubeGeometry,
    topology: &Topology,
    state: &SimState,
) -> Vec<f64> {
    let (x, v) = methane_com(topology, state);
    let p = tube.point_to_tube(x);
    let vt = tube.to_tube(v);
    let to_entrance = math::sub([0.0, 0.0, tube.entrance()], p);
    let len = math::norm(to_entrance);
    let u = if len > 0.0 {
        math::scale(to_entrance, 1.0 / len)
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut obs = Vec::with_capacity(super::NANOTUBE_OBS_DIM);
    obs.extend_from_slice(&p);
    obs.extend_from_slice(&vt);
    obs.extend_from_slice(&u);
    obs
}

/// Positions then velocities of the first and last bead, relative to the chain centroid.
pub fn alanine_observation(state: &SimState) -> Vec<f64> {
    let n = ALANINE_BEADS as f64;
    let mut cx = [0.0; 3];
    let mut cv = [0.0; 3];
    for (x, v) in state.positions.iter().zip(&state.velocities) {
        cx = math::add(cx, *x);
        cv = math::add(cv, *v);
    }
    cx = math::scale(cx, 1.0 / n);
    cv = math::scale(cv, 1.0 / n);
    let last = ALANINE_BEADS - 1;
    let mut obs = Vec::with_capacity(super::ALANINE_OBS_DIM);
    obs.extend_from_slice(&math::sub(state.positions[0], cx));
    obs.extend_from_slice(&math::sub(state.positions[last], cx));
    obs.extend_from_slice(&math::sub(state.velocities[0], cv));
    obs.extend_from_slice(&math::sub(state.velocities[last], cv));
    obs
}
