//! TOML configuration. Every key is optional; command-line flags override it.
//!
//! ```toml
//! [server]
//! port = 8765
//! tick_hz = 30.0
//!
//! [task]
//! step_budget = 2000
//!
//! [gail]
//! iterations = 300
//! ```

use std::path::{Path, PathBuf};

use demoforge_core::env::{ScriptedExpertConfig, TaskConfig};
use demoforge_core::il::{BcConfig, DaggerConfig, Discretizer, GailConfig, IrlConfig};
use demoforge_core::md::TaskId;
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "DEMOFORGE_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Broadcast ticks per second.
    pub tick_hz: f64,
    /// Integrator steps per tick.
    pub steps_per_tick: u64,
    /// Broadcast (and record) every k-th tick.
    pub frame_every: u64,
    /// Task of sessions created on first connection.
    pub task: TaskId,
    pub seed: u64,
    /// Langevin thermostat during live sessions.
    pub thermostat: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 8765,
            tick_hz: 30.0,
            steps_per_tick: 10,
            frame_every: 1,
            task: TaskId::Nanotube,
            seed: 0,
            thermostat: true,
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tick_hz > 0.0 && self.tick_hz.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "tick_hz must be positive, got {}",
                self.tick_hz
            )));
        }
        if self.steps_per_tick == 0 || self.frame_every == 0 {
            return Err(ConfigError::Invalid(
                "steps_per_tick and frame_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertSection {
    pub kp: f64,
    pub kd: f64,
    pub tolerance: f64,
}

impl Default for ExpertSection {
    fn default() -> Self {
        let d = ScriptedExpertConfig::default();
        ExpertSection {
            kp: d.kp,
            kd: d.kd,
            tolerance: d.tolerance,
        }
    }
}

impl ExpertSection {
    pub fn to_config(&self) -> ScriptedExpertConfig {
        ScriptedExpertConfig {
            kp: self.kp,
            kd: self.kd,
            tolerance: self.tolerance,
            ..ScriptedExpertConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub server: ServerConfig,
    pub task: TaskConfig,
    pub expert: ExpertSection,
    pub bc: BcConfig,
    pub gail: GailConfig,
    pub dagger: DaggerConfig,
    pub irl: IrlConfig,
    pub discretizer: Discretizer,
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.into(),
            source,
        })?;
        cfg.server.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// `explicit`, else `$DEMOFORGE_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::read(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::read(Path::new(&p)),
                _ => Ok(Config::default()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = Config::from_toml(
            "[server]\nport = 9000\n[gail]\niterations = 5\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(cfg.server.port, 9000);
        assert_eq!(cfg.server.tick_hz, 30.0);
        assert_eq!(cfg.gail.iterations, 5);
        assert_eq!(
            cfg.gail.episodes_per_iteration,
            GailConfig::default().episodes_per_iteration
        );
        assert_eq!(cfg.task, TaskConfig::default());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Config::from_toml("[server]\ntick_hz = 0.0\n", Path::new("x")).is_err());
        assert!(Config::from_toml("[server]\nbogus = 1\n", Path::new("x")).is_err());
        assert!(Config::from_toml("[server\n", Path::new("x")).is_err());
    }
}
