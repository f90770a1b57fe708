use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Action, EnvError, Policy, PolicyStep};
use crate::math::{self, Vec3};
use crate::md::{tube_geometry, F_MAX};

/// PD controller that steers the methane COM along tube-frame waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedExpertConfig {
    /// Tube-frame points, ordered by axial coordinate.
    pub waypoints: Vec<Vec3>,
    /// kJ/mol/nm²
    pub kp: f64,
    /// kJ/mol·ps/nm²
    pub kd: f64,
    /// nm
    pub tolerance: f64,
    /// Axial coordinate of the tube entrance. Below it a waypoint only counts as
    /// reached once the COM is laterally within `tolerance` of it.
    pub entrance: f64,
}

impl Default for ScriptedExpertConfig {
    fn default() -> Self {
        let g = tube_geometry();
        ScriptedExpertConfig {
            waypoints: vec![
                [0.0, 0.0, g.entrance() - 0.5],
                [0.0, 0.0, 0.0],
                [0.0, 0.0, g.exit() + 0.5],
            ],
            kp: 500.0,
            kd: 50.0,
            tolerance: 0.1,
            entrance: g.entrance(),
        }
    }
}

impl ScriptedExpertConfig {
    fn reached(&self, p: Vec3, w: Vec3) -> bool {
        if p[2] < w[2] - self.tolerance {
            return false;
        }
        let lateral = math::sqrt((p[0] - w[0]) * (p[0] - w[0]) + (p[1] - w[1]) * (p[1] - w[1]));
        p[2] >= self.entrance || lateral <= self.tolerance
    }

    /// First waypoint not yet reached; the last one once all are.
    pub fn target(&self, p: Vec3) -> Vec3 {
        self.waypoints
            .iter()
            .copied()
            .find(|w| !self.reached(p, *w))
            .or_else(|| self.waypoints.last().copied())
            .unwrap_or(p)
    }
}

/// `F = kp (w - x) - kd v`, clamped to `F_MAX`; depends only on the observation.
pub fn expert_action(obs: &[f64], cfg: &ScriptedExpertConfig) -> Action {
    let p = [obs[0], obs[1], obs[2]];
    let v = [obs[3], obs[4], obs[5]];
    let w = cfg.target(p);
    let f = math::sub(math::scale(math::sub(w, p), cfg.kp), math::scale(v, cfg.kd));
    math::clamp_norm(f, F_MAX)
}

#[derive(Debug, Clone, Default)]
pub struct ExpertPolicy {
    pub config: ScriptedExpertConfig,
}

impl Policy for ExpertPolicy {
    fn act(&mut self, obs: &[f64], _step: usize) -> Result<PolicyStep, EnvError> {
        Ok(PolicyStep {
            action: expert_action(obs, &self.config),
            log_prob: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(p: Vec3, v: Vec3) -> Vec<f64> {
        let mut o = Vec::new();
        o.extend_from_slice(&p);
        o.extend_from_slice(&v);
        o.extend_from_slice(&[0.0, 0.0, 1.0]);
        o
    }

    #[test]
    fn pd_fixed_point() {
        let cfg = ScriptedExpertConfig::default();
        let last = *cfg.waypoints.last().unwrap();
        assert_eq!(expert_action(&obs(last, [0.0; 3]), &cfg), [0.0; 3]);
    }

    #[test]
    fn force_never_exceeds_cap() {
        let cfg = ScriptedExpertConfig::default();
        let mut s = crate::rng::stream(1, 2);
        for _ in 0..1000 {
            let p = crate::math::scale(s.normal3(), 5.0);
            let v = crate::math::scale(s.normal3(), 20.0);
            assert!(math::norm(expert_action(&obs(p, v), &cfg)) <= F_MAX * (1.0 + 1e-12));
        }
    }

    #[test]
    fn off_axis_before_entrance_aligns_first() {
        let cfg = ScriptedExpertConfig::default();
        let p = [0.3, 0.0, cfg.entrance - 0.2];
        assert_eq!(cfg.target(p), cfg.waypoints[0]);
        let on_axis = [0.02, 0.0, cfg.entrance - 0.45];
        assert_eq!(cfg.target(on_axis), cfg.waypoints[1]);
        let inside = [0.15, 0.0, 0.0];
        assert_eq!(cfg.target(inside), cfg.waypoints[2]);
    }
}
