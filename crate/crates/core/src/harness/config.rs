use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::backend::BackendConfig;
use crate::degrade::{DegradationKind, RecaptureParams, Seed};
use crate::error::{Error, Result};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "FDB_MASTER_SEED";

pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// Keys accepted in config files and as `--key value` overrides.
pub const CONFIG_KEYS: [&str; 17] = [
    "manifest",
    "master_seed",
    "threshold",
    "kinds",
    "params_mode",
    "protocol",
    "enhance_cmd",
    "embed_cmd",
    "embed_dim",
    "timeout_s",
    "output_dir",
    "grid_period",
    "moire_freq",
    "moire_amp",
    "reflect_strength",
    "recapture_quality",
    "workers",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsMode {
    /// One seeded spec per identity and kind.
    Sampled,
    /// Every grid value per identity and kind.
    Sweep,
}

impl FromStr for ParamsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sampled" => Ok(ParamsMode::Sampled),
            "sweep" => Ok(ParamsMode::Sweep),
            other => Err(Error::Validation(format!(
                "params_mode must be sampled or sweep, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Closed-set identification against every enrolled reference.
    Identify,
    /// Genuine-pair verification against the probe's own reference.
    Verify,
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identify" => Ok(Protocol::Identify),
            "verify" => Ok(Protocol::Verify),
            other => Err(Error::Validation(format!(
                "protocol must be identify or verify, got {other:?}"
            ))),
        }
    }
}

/// Raw `key -> value` settings, layered from file, environment and flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses `key=value` lines (`#` comments allowed) or a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        if text.trim_start().starts_with('{') {
            let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
                .map_err(|e| Error::Validation(format!("config is not a JSON object: {e}")))?;
            for (k, v) in obj {
                let value = match v {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|i| i.as_str().map_or_else(|| i.to_string(), str::to_string))
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                settings.set(&k, &value)?;
            }
            return Ok(settings);
        }
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Validation(format!("config line {}: expected key=value", n + 1))
            })?;
            settings.set(k.trim(), v.trim())?;
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Validation(format!("unknown config key {key:?}")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Applies the seed override from the environment, if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.set("master_seed", &v)?;
        }
        Ok(())
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|e| Error::Validation(format!("{key} = {v:?}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Manifest CSV, or a dataset directory to auto-pair.
    pub manifest: PathBuf,
    pub master_seed: Seed,
    pub threshold: f64,
    pub kinds: Vec<DegradationKind>,
    pub params_mode: ParamsMode,
    pub protocol: Protocol,
    pub backends: BackendConfig,
    pub output_dir: PathBuf,
    pub recapture: RecaptureParams,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let manifest = s
            .get("manifest")
            .map(PathBuf::from)
            .ok_or_else(|| Error::Validation("manifest is required".into()))?;
        let output_dir = s
            .get("output_dir")
            .map(PathBuf::from)
            .ok_or_else(|| Error::Validation("output_dir is required".into()))?;
        let threshold: f64 = s.parsed("threshold", DEFAULT_THRESHOLD)?;
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(Error::Validation(format!(
                "threshold must be in [-1, 1], got {threshold}"
            )));
        }
        let kinds = match s.get("kinds") {
            None => DegradationKind::ALL.to_vec(),
            Some(v) if v.trim() == "all" => DegradationKind::ALL.to_vec(),
            Some(v) => {
                let mut kinds = v
                    .split(',')
                    .filter(|k| !k.trim().is_empty())
                    .map(|k| {
                        k.parse::<DegradationKind>()
                            .map_err(|e| Error::Validation(e.to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                kinds.sort();
                kinds.dedup();
                kinds
            }
        };
        if kinds.is_empty() {
            return Err(Error::Validation("kinds must not be empty".into()));
        }
        let defaults = RecaptureParams::default();
        let recapture = RecaptureParams {
            grid_period: s.parsed("grid_period", defaults.grid_period)?,
            moire_freq: s.parsed("moire_freq", defaults.moire_freq)?,
            moire_amp: s.parsed("moire_amp", defaults.moire_amp)?,
            reflect_strength: s.parsed("reflect_strength", defaults.reflect_strength)?,
            recapture_quality: s.parsed("recapture_quality", defaults.recapture_quality)?,
        };
        recapture
            .validate()
            .map_err(|e| Error::Validation(e.to_string()))?;
        let backends = BackendConfig::new(
            s.get("enhance_cmd").unwrap_or("identity"),
            s.get("embed_cmd").unwrap_or("mock"),
            s.parsed("timeout_s", 120.0)?,
            s.parsed("embed_dim", 512usize)?,
        )?;
        let workers = match s.get("workers") {
            None => None,
            Some(_) => match s.parsed("workers", 0usize)? {
                0 => return Err(Error::Validation("workers must be positive".into())),
                n => Some(n),
            },
        };
        Ok(ExperimentConfig {
            manifest,
            master_seed: Seed(s.parsed("master_seed", 0u64)?),
            threshold,
            kinds,
            params_mode: s.parsed("params_mode", ParamsMode::Sampled)?,
            protocol: s.parsed("protocol", Protocol::Identify)?,
            backends,
            output_dir,
            recapture,
            workers,
        })
    }
}
