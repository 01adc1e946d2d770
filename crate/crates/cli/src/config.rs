//! Config-file loading and flag merging.
//!
//! A config file is a flat JSON object. Command-line flags override file
//! values; every resolved parameter is echoed into the outputs with its
//! provenance (`flag`, `config`, or `default`), including the file value a
//! flag overrode.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    UnknownKey(String),
    Missing(&'static str),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config i/o error: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::UnknownKey(k) => write!(f, "unknown config key: {k}"),
            ConfigError::Missing(k) => write!(f, "missing required parameter: {k}"),
            ConfigError::Invalid(e) => write!(f, "invalid parameter: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Flag,
    Config,
    Default,
    /// Flag value that shadowed a config-file entry (the file value is kept
    /// alongside for the echo).
    FlagOverridingConfig {
        config_value: Value,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedValue {
    pub value: Value,
    pub source: Provenance,
}

/// Flat config file plus a record of every resolved parameter.
#[derive(Debug, Default)]
pub struct ConfigResolver {
    file: BTreeMap<String, Value>,
    pub resolved: BTreeMap<String, ResolvedValue>,
    consumed: Vec<String>,
}

impl ConfigResolver {
    pub fn from_path(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{path:?}: {e}")))?;
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(format!("{path:?}: {e}")))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::Parse(format!(
                "{path:?}: config must be a flat JSON object"
            )));
        };
        Ok(Self {
            file: map.into_iter().collect(),
            resolved: BTreeMap::new(),
            consumed: Vec::new(),
        })
    }

    fn record(&mut self, key: &str, value: Value, source: Provenance) {
        self.resolved
            .insert(key.to_string(), ResolvedValue { value, source });
        self.consumed.push(key.to_string());
    }

    fn lookup(&mut self, key: &str, flag: Option<Value>, default: Option<Value>) -> Option<Value> {
        let file_value = self.file.get(key).cloned();
        match (flag, file_value) {
            (Some(v), Some(fv)) => {
                self.record(
                    key,
                    v.clone(),
                    Provenance::FlagOverridingConfig { config_value: fv },
                );
                Some(v)
            }
            (Some(v), None) => {
                self.record(key, v.clone(), Provenance::Flag);
                Some(v)
            }
            (None, Some(fv)) => {
                self.record(key, fv.clone(), Provenance::Config);
                Some(fv)
            }
            (None, None) => default.inspect(|v| {
                self.record(key, v.clone(), Provenance::Default);
            }),
        }
    }

    pub fn f64(
        &mut self,
        key: &str,
        flag: Option<f64>,
        default: Option<f64>,
    ) -> Result<Option<f64>, ConfigError> {
        match self.lookup(key, flag.map(Value::from), default.map(Value::from)) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| ConfigError::Invalid(format!("{key} must be a number, got {v}"))),
        }
    }

    pub fn usize(
        &mut self,
        key: &str,
        flag: Option<usize>,
        default: Option<usize>,
    ) -> Result<Option<usize>, ConfigError> {
        match self.lookup(key, flag.map(|v| Value::from(v as u64)), default.map(|v| Value::from(v as u64))) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|v| Some(v as usize))
                .ok_or_else(|| ConfigError::Invalid(format!("{key} must be an unsigned integer, got {v}"))),
        }
    }

    pub fn u64(
        &mut self,
        key: &str,
        flag: Option<u64>,
        default: Option<u64>,
    ) -> Result<Option<u64>, ConfigError> {
        match self.lookup(key, flag.map(Value::from), default.map(Value::from)) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| ConfigError::Invalid(format!("{key} must be an unsigned integer, got {v}"))),
        }
    }

    pub fn string(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: Option<&str>,
    ) -> Result<Option<String>, ConfigError> {
        match self.lookup(
            key,
            flag.map(Value::from),
            default.map(|v| Value::from(v.to_string())),
        ) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| ConfigError::Invalid(format!("{key} must be a string, got {v}"))),
        }
    }

    pub fn require_f64(&mut self, key: &'static str, flag: Option<f64>) -> Result<f64, ConfigError> {
        self.f64(key, flag, None)?.ok_or(ConfigError::Missing(key))
    }

    pub fn require_usize(
        &mut self,
        key: &'static str,
        flag: Option<usize>,
    ) -> Result<usize, ConfigError> {
        self.usize(key, flag, None)?.ok_or(ConfigError::Missing(key))
    }

    /// Every file key must have been consumed by the command's schema.
    pub fn reject_unknown(&self) -> Result<(), ConfigError> {
        for key in self.file.keys() {
            if !self.consumed.contains(key) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        Ok(())
    }
}
