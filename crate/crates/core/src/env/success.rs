use serde::{Deserialize, Serialize};

use crate::math::{self, Vec3};
use crate::md::TubeGeometry;

/// Incremental threading detector over methane COM samples in the tube frame.
///
/// An attempt is armed whenever the COM is below `entrance - margin`. It is
/// spoiled if, while its axial coordinate lies within the tube, the COM is
/// not inside the tube radius. An armed, unspoiled attempt that reaches
/// `exit + margin` latches success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessTracker {
    entrance: f64,
    exit: f64,
    radius: f64,
    margin: f64,
    armed: bool,
    success: bool,
}

impl SuccessTracker {
    pub fn new(tube: TubeGeometry, margin: f64) -> Self {
        SuccessTracker {
            entrance: tube.entrance(),
            exit: tube.exit(),
            radius: tube.radius,
            margin,
            armed: false,
            success: false,
        }
    }

    pub fn push(&mut self, p: Vec3) {
        if self.success {
            return;
        }
        let z = p[2];
        if z < self.entrance - self.margin {
            self.armed = true;
        }
        if z >= self.entrance
            && z <= self.exit
            && math::sqrt(p[0] * p[0] + p[1] * p[1]) >= self.radius
        {
            self.armed = false;
        }
        if self.armed && z > self.exit + self.margin {
            self.success = true;
        }
    }

    pub fn succeeded(&self) -> bool {
        self.success
    }
}

/// Whether a history of methane COM positions (tube frame) threads the tube.
pub fn is_success(tube: &TubeGeometry, margin: f64, history: &[Vec3]) -> bool {
    let mut t = SuccessTracker::new(*tube, margin);
    history.iter().for_each(|p| t.push(*p));
    t.succeeded()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::tube_geometry;
    use alloc::vec::Vec;

    fn line(from: Vec3, to: Vec3, n: usize) -> Vec<Vec3> {
        (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                math::add(from, math::scale(math::sub(to, from), t))
            })
            .collect()
    }

    #[test]
    fn single_sample_is_not_success() {
        let g = tube_geometry();
        assert!(!is_success(&g, 0.1, &[[0.0, 0.0, -1.0]]));
    }

    #[test]
    fn straight_path_through_axis_succeeds() {
        let g = tube_geometry();
        assert!(is_success(
            &g,
            0.1,
            &line([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], 50)
        ));
    }

    #[test]
    fn bypass_outside_the_wall_fails() {
        let g = tube_geometry();
        let mut path = line([0.0, 0.0, -1.0], [0.6, 0.0, -0.5], 10);
        path.extend(line([0.6, 0.0, -0.5], [0.6, 0.0, 0.5], 20));
        path.extend(line([0.6, 0.0, 0.5], [0.0, 0.0, 1.0], 10));
        assert!(!is_success(&g, 0.1, &path));
    }

    #[test]
    fn reverse_crossing_is_not_success() {
        let g = tube_geometry();
        assert!(!is_success(
            &g,
            0.1,
            &line([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], 50)
        ));
    }

    #[test]
    fn must_start_below_the_margin() {
        let g = tube_geometry();
        let path = line([0.0, 0.0, g.entrance() - 0.05], [0.0, 0.0, 1.0], 50);
        assert!(!is_success(&g, 0.1, &path));
    }
}
