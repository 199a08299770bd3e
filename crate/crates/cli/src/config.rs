//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [grid]
//! n = 16
//! m = 16
//! [forcing]
//! preset = trig
//! ```
//!
//! Keys before the first header live in the unnamed section `""`. Lookups use
//! `section.key`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate key '{key}' on line {line}")]
    Duplicate { key: String, line: usize },
    #[error("missing required key '{0}'")]
    Missing(String),
    #[error("key '{key}': cannot parse '{value}'")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name =
                    rest.strip_suffix(']').map(str::trim).filter(|n| is_name(n)).ok_or_else(|| {
                        ConfigError::Syntax { line, message: format!("bad section header '{content}'") }
                    })?;
                section = name.to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected key = value, got '{content}'"),
            })?;
            let key = key.trim();
            if !is_name(key) {
                return Err(ConfigError::Syntax { line, message: format!("bad key '{key}'") });
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { key: full, line });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Sets or replaces `key` (used for command-line overrides).
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| ConfigError::Value { key: key.to_string(), value: v.to_string() }))
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.require(key)?;
        Ok(self.parse_opt(key)?.expect("present"))
    }

    /// Comma-separated list.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| ConfigError::Value { key: key.to_string(), value: v.to_string() }))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl fmt::Display for Config {
    /// Canonical text form; parses back to an equal `Config`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let split = |full: &'_ str| -> (String, String) {
            match full.split_once('.') {
                Some((s, k)) => (s.to_string(), k.to_string()),
                None => (String::new(), full.to_string()),
            }
        };
        let mut sorted: Vec<_> = self.entries.iter().map(|(k, v)| (split(k), v)).collect();
        sorted.sort();
        let mut current: Option<&str> = None;
        for ((section, key), value) in &sorted {
            if current != Some(section.as_str()) {
                if !section.is_empty() {
                    writeln!(f, "[{section}]")?;
                }
                current = Some(section);
            }
            writeln!(f, "{key} = {value}")?;
        }
        Ok(())
    }
}
