//! `slideloop.toml`: defaults shared by the CLI and the service.
//!
//! ```toml
//! [backend]
//! reviewer = "heuristic"      # oracle | heuristic | remote
//! contributor = "heuristic"
//!
//! [perturbation]
//! seed = 7
//! severity = 0.3
//! enabled_kinds = ["position_shift", "color_alteration"]
//!
//! [perturbation.magnitudes]
//! shift_max = 0.08
//!
//! [heuristic]
//! house_font = "Georgia"
//!
//! [remote]
//! endpoint = "http://127.0.0.1:8000/v1/chat/completions"
//! model = "slide-designer"
//!
//! [refine]
//! max_iterations = 5
//!
//! [service]
//! data_dir = "sessions"
//! ```
//!
//! Every section and key is optional. `SLIDELOOP_REMOTE_URL`,
//! `SLIDELOOP_MODEL` and `SLIDELOOP_API_KEY` override the remote section.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::orchestrator::RefineOptions;
use crate::perturb::PerturbConfig;
use crate::roles::{BackendKind, HeuristicConfig, RemoteModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendChoice {
    pub reviewer: BackendKind,
    pub contributor: BackendKind,
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice {
            reviewer: BackendKind::Heuristic,
            contributor: BackendKind::Heuristic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub port: u16,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("sessions"),
            port: 8080,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub backend: BackendChoice,
    pub perturbation: PerturbConfig,
    pub heuristic: HeuristicConfig,
    pub remote: RemoteModelConfig,
    pub refine: RefineOptions,
    pub service: ServiceConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.perturbation.validate().map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.remote.validate().map_err(ConfigError::Parse)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml(&text)
    }

    /// Applies the remote-endpoint environment variables.
    pub fn with_env(mut self) -> Config {
        self.apply_env(|k| std::env::var(k).ok());
        self
    }

    fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(url) = var("SLIDELOOP_REMOTE_URL") {
            self.remote.endpoint = url;
        }
        if let Some(model) = var("SLIDELOOP_MODEL") {
            self.remote.model = model;
        }
        if let Some(key) = var("SLIDELOOP_API_KEY") {
            self.remote.api_key = Some(key);
        }
    }
}
