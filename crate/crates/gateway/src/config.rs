//! Gateway configuration: a TOML file with an environment override for the
//! listen address.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};
use crate::session::SessionConfig;

/// Overrides `listen` when set.
pub const LISTEN_ENV: &str = "CHAIR_GATEWAY_LISTEN";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub listen: SocketAddr,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    /// Extra subject profiles (profile TOML), added to the built-in ones.
    pub profiles: Option<PathBuf>,
    /// Extra maps by id, each a map text file.
    pub maps: BTreeMap<String, PathBuf>,
    pub telemetry: TelemetryConfig,
    /// Session started at boot, if any.
    pub session: Option<SessionConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TelemetryConfig {
    /// Per-subscriber backlog of alarm, command and decision messages.
    pub critical_capacity: usize,
    /// Per-subscriber backlog of eeg, pose and sensor messages.
    pub bulk_capacity: usize,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self { critical_capacity: 1024, bulk_capacity: 256 }
    }
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            time_scale: 1.0,
            profiles: None,
            maps: BTreeMap::new(),
            telemetry: TelemetryConfig::default(),
            session: None,
        }
    }
}

impl GatewayConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Apply overrides from `lookup`, normally the process environment.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = lookup(LISTEN_ENV) {
            self.listen = v.parse().map_err(|e| GatewayError::Config(format!("{LISTEN_ENV}={v}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(GatewayError::Config("time_scale must be > 0".into()));
        }
        if self.telemetry.critical_capacity == 0 || self.telemetry.bulk_capacity == 0 {
            return Err(GatewayError::Config("telemetry capacities must be >= 1".into()));
        }
        Ok(())
    }
}
