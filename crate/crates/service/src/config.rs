//! Service configuration: a TOML file plus environment overrides.
//!
//! Every field has a default, so a bare `lcaas-server` starts a working
//! service with a simulated anchoring backend under `./lcaas-data`.
//! Configuration is immutable after startup; a ledger remembers its own
//! chain capacity, and reopening it under a conflicting `capacity_n` is
//! refused rather than silently reinterpreted.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Environment variables honoured as overrides, in the order applied.
pub const ENV_OVERRIDES: [&str; 6] = [
    "LCAAS_ROOT",
    "LCAAS_LISTEN",
    "LCAAS_CAPACITY",
    "LCAAS_GAS_GWEI",
    "LCAAS_ANCHOR",
    "LCAAS_SEED",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid value for {name}: {value:?} ({reason})")]
    BadValue { name: String, value: String, reason: String },
}

/// Which anchoring backend to attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// Seeded in-process simulator with the calibrated latency profile.
    Simulated,
    /// No anchoring: seals record no ticket; a backend can be attached on
    /// a later run and catch up via the missing-anchor sweep.
    None,
}

/// Which clock drives timestamps, anchor scheduling, and polling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Wall,
    /// Virtual time, advanced by an embedding harness. Only meaningful
    /// in-process; the standalone server refuses it.
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    /// Directory holding the ledger files.
    pub ledger_root: PathBuf,
    pub listen_address: String,
    /// Data blocks per circled chain; applies when initializing a fresh
    /// ledger and must match the manifest when reopening one.
    pub capacity_n: u64,
    /// Gas price bid on every anchoring submission, in gwei.
    pub gas_price_gwei: u64,
    pub anchor_backend: AnchorMode,
    /// Seed for the anchoring simulator's latency draws.
    pub rng_seed: u64,
    pub clock_mode: ClockMode,
    /// Largest accepted raw-log body, in bytes.
    pub max_body_bytes: usize,
    /// How often the background task polls unconfirmed anchor tickets.
    pub poll_interval_ms: u64,
    /// Refuse gas prices outside the calibrated tiers instead of snapping
    /// to the nearest one.
    pub strict_gas_tiers: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            ledger_root: PathBuf::from("lcaas-data"),
            listen_address: "127.0.0.1:8080".to_string(),
            capacity_n: 100,
            gas_price_gwei: 9,
            anchor_backend: AnchorMode::Simulated,
            rng_seed: 42,
            clock_mode: ClockMode::Wall,
            max_body_bytes: 10 * 1024 * 1024,
            poll_interval_ms: 1_000,
            strict_gas_tiers: false,
        }
    }
}

impl ServiceConfig {
    /// Reads a TOML config file. Missing keys fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let config: ServiceConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        config.validate()
    }

    /// Applies the `LCAAS_*` environment overrides (see [`ENV_OVERRIDES`]).
    pub fn with_env_overrides(mut self) -> Result<Self, ConfigError> {
        if let Some(v) = env_var("LCAAS_ROOT") {
            self.ledger_root = PathBuf::from(v);
        }
        if let Some(v) = env_var("LCAAS_LISTEN") {
            self.listen_address = v;
        }
        if let Some(v) = env_var("LCAAS_CAPACITY") {
            self.capacity_n = parse_env("LCAAS_CAPACITY", &v)?;
        }
        if let Some(v) = env_var("LCAAS_GAS_GWEI") {
            self.gas_price_gwei = parse_env("LCAAS_GAS_GWEI", &v)?;
        }
        if let Some(v) = env_var("LCAAS_ANCHOR") {
            self.anchor_backend = match v.as_str() {
                "simulated" => AnchorMode::Simulated,
                "none" => AnchorMode::None,
                other => {
                    return Err(ConfigError::BadValue {
                        name: "LCAAS_ANCHOR".to_string(),
                        value: other.to_string(),
                        reason: "expected \"simulated\" or \"none\"".to_string(),
                    })
                }
            };
        }
        if let Some(v) = env_var("LCAAS_SEED") {
            self.rng_seed = parse_env("LCAAS_SEED", &v)?;
        }
        self.validate()
    }

    pub fn validate(self) -> Result<Self, ConfigError> {
        if self.capacity_n == 0 {
            return Err(bad_value("capacity_n", "0", "must be at least 1"));
        }
        if self.gas_price_gwei == 0 {
            return Err(bad_value("gas_price_gwei", "0", "must be at least 1 gwei"));
        }
        if self.max_body_bytes == 0 {
            return Err(bad_value("max_body_bytes", "0", "must be at least 1"));
        }
        if self.poll_interval_ms == 0 {
            return Err(bad_value("poll_interval_ms", "0", "must be at least 1"));
        }
        Ok(self)
    }
}

fn bad_value(name: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue {
        name: name.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        name: name.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}
