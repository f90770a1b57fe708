use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{MdError, F_MAX, F_UNIT};
use crate::math::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InteractionMode {
    /// Fixed-magnitude pull of `scale * F_UNIT` toward the controller.
    ConstantPull,
    /// Force from the well `-scale * depth * exp(-|r - c|^2 / (2 width^2))`.
    GaussianWell { width: f64, depth: f64 },
    /// A fixed force vector (kJ/mol/nm) times `scale`; the controller position is ignored.
    /// Used by the task environments to apply agent actions.
    Constant { force: Vec3 },
}

impl InteractionMode {
    pub fn gaussian_well() -> Self {
        InteractionMode::GaussianWell {
            width: 0.3,
            depth: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractiveForce {
    pub id: String,
    pub atoms: Vec<usize>,
    /// nm
    pub controller: Vec3,
    pub scale: f64,
    pub mode: InteractionMode,
}

impl InteractiveForce {
    pub fn validate(&self, n_atoms: usize) -> Result<(), MdError> {
        let bad = |msg: String| Err(MdError::InvalidInteraction(msg));
        if self.atoms.is_empty() {
            return bad(alloc::format!("interaction `{}` selects no atoms", self.id));
        }
        if let Some(&a) = self.atoms.iter().find(|&&a| a >= n_atoms) {
            return bad(alloc::format!(
                "interaction `{}`: atom {a} out of range",
                self.id
            ));
        }
        if !self.scale.is_finite() || self.scale < 0.0 {
            return bad(alloc::format!(
                "interaction `{}`: bad scale {}",
                self.id,
                self.scale
            ));
        }
        if !math::is_finite3(self.controller) {
            return bad(alloc::format!(
                "interaction `{}`: non-finite controller",
                self.id
            ));
        }
        match self.mode {
            InteractionMode::GaussianWell { width, depth } => {
                if !(width > 0.0) || !depth.is_finite() {
                    return bad(alloc::format!("interaction `{}`: bad well shape", self.id));
                }
            }
            InteractionMode::Constant { force } => {
                if !math::is_finite3(force) {
                    return bad(alloc::format!(
                        "interaction `{}`: non-finite force",
                        self.id
                    ));
                }
            }
            InteractionMode::ConstantPull => {}
        }
        Ok(())
    }

    /// Force on a single atom at `r`, before clamping.
    fn raw_force(&self, r: Vec3) -> Vec3 {
        match self.mode {
            InteractionMode::ConstantPull => {
                let d = math::sub(self.controller, r);
                let len = math::norm(d);
                if len == 0.0 {
                    [0.0; 3]
                } else {
                    math::scale(d, self.scale * F_UNIT / len)
                }
            }
            InteractionMode::GaussianWell { width, depth } => {
                let d = math::sub(r, self.controller);
                let w2 = width * width;
                let g = math::exp(-math::norm2(d) / (2.0 * w2));
                math::scale(d, -self.scale * depth * g / w2)
            }
            InteractionMode::Constant { force } => math::scale(force, self.scale),
        }
    }
}

/// Per-atom forces of one interaction, each atom clamped to `F_MAX`.
pub fn interactive_force_eval(interaction: &InteractiveForce, positions: &[Vec3]) -> Vec<Vec3> {
    let mut out = vec![[0.0; 3]; positions.len()];
    for &a in &interaction.atoms {
        let f = interaction.raw_force(positions[a]);
        out[a] = math::clamp_norm(math::add(out[a], f), F_MAX);
    }
    out
}

/// Potential of a gaussian-well interaction for an atom at `r`; `None` for other modes.
pub fn well_potential(interaction: &InteractiveForce, r: Vec3) -> Option<f64> {
    match interaction.mode {
        InteractionMode::GaussianWell { width, depth } => {
            let d = math::sub(r, interaction.controller);
            Some(-interaction.scale * depth * math::exp(-math::norm2(d) / (2.0 * width * width)))
        }
        _ => None,
    }
}
