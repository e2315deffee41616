//! Flat `key = value` configuration with `--key value` overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    UnknownKey(String),
    Malformed { line: usize, text: String },
    MissingValue(String),
    Invalid { key: String, value: String, reason: String },
    Missing(String),
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(k) => write!(f, "unknown config key `{k}`"),
            ConfigError::Malformed { line, text } => write!(f, "line {line}: expected `key = value`, got `{text}`"),
            ConfigError::MissingValue(k) => write!(f, "flag `--{k}` needs a value"),
            ConfigError::Invalid { key, value, reason } => write!(f, "invalid value `{value}` for `{key}`: {reason}"),
            ConfigError::Missing(k) => write!(f, "missing required key `{k}`"),
            ConfigError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Resolved key/value pairs for one invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_file_text(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: idx + 1,
                text: line.to_string(),
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    line: idx + 1,
                    text: line.to_string(),
                });
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Builds the config from `--config path` (if present) and `--key value` flags.
    pub fn from_args(args: &[String]) -> Result<Self, ConfigError> {
        let mut overrides = BTreeMap::new();
        let mut file = None;
        let mut iter = args.iter();
        while let Some(arg) = iter.next() {
            let key = arg.strip_prefix("--").ok_or_else(|| ConfigError::Malformed {
                line: 0,
                text: arg.clone(),
            })?;
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (normalize(k), v.to_string()),
                None => {
                    let v = iter.next().ok_or_else(|| ConfigError::MissingValue(key.to_string()))?;
                    (normalize(key), v.clone())
                }
            };
            if key == "config" {
                file = Some(value);
            } else {
                overrides.insert(key, value);
            }
        }
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io(format!("cannot read config `{path}`: {e}")))?;
                Self::parse_file_text(&text)?
            }
            None => Self::default(),
        };
        config.values.extend(overrides);
        Ok(config)
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            Some(v) => parse_value(key, v),
            None => Ok(default),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| ConfigError::Missing(key.to_string()))?;
        parse_value(key, v)
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    /// Comma-separated list.
    pub fn list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr + Clone,
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v.split(',').map(|item| parse_value(key, item.trim())).collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("out"))
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Invalid {
        key: key.to_string(),
        value: v.to_string(),
        reason: e.to_string(),
    })
}
