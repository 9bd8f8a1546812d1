//! Flat `key = value` experiment files. Matrices and lists may be written as
//! JSON; `#` starts a comment line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "config field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    line: Option<usize>,
    value: String,
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(i + 1),
                    field: line.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError { line: Some(i + 1), field: String::new(), message: "empty key".into() });
            }
            let entry = Entry { line: Some(i + 1), value: v.trim().to_string() };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(ConfigError {
                    line: Some(i + 1),
                    field: key,
                    message: format!("duplicate key, first set on line {}", prev.line.unwrap_or(0)),
                });
            }
        }
        Ok(RawConfig { entries })
    }

    /// Sets or replaces a value from the command line.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), Entry { line: None, value: value.to_string() });
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { line: self.entries.get(key).and_then(|e| e.line), field: key.to_string(), message: message.into() }
    }

    pub fn check_known(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(self.error(k, format!("unknown key; expected one of: {}", known.join(", ")))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| self.error(key, format!("cannot parse `{v}`: {e}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| self.error(key, "required key is missing"))
    }

    pub fn json<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| serde_json::from_str(v).map_err(|e| self.error(key, format!("invalid JSON: {e}"))))
            .transpose()
    }

    /// A list given either as a JSON array or comma separated.
    pub fn list<T: FromStr + DeserializeOwned>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let out: Vec<T> = if v.starts_with('[') {
            self.json(key)?.expect("present")
        } else {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| self.error(key, format!("cannot parse `{s}`: {e}"))))
                .collect::<Result<_, _>>()?
        };
        Ok(Some(out))
    }

    /// Canonical text: sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, e)| format!("{k}={}\n", e.value)).collect()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let c = RawConfig::parse("# demo\neps_grid = 0.1, 0.2\n\nn_max=3\nfamilies = [1,2]\n").unwrap();
        assert_eq!(c.list::<f64>("eps_grid").unwrap(), Some(vec![0.1, 0.2]));
        assert_eq!(c.require::<usize>("n_max").unwrap(), 3);
        assert_eq!(c.list::<usize>("families").unwrap(), Some(vec![1, 2]));
        let e = c.require::<usize>("n_min").unwrap_err();
        assert_eq!(e.line, None);
        let bad = RawConfig::parse("a = 1\nn_max = x\n").unwrap();
        let e = bad.get::<usize>("n_max").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("line 2"));
        assert!(RawConfig::parse("a = 1\na = 2\n").unwrap_err().message.contains("duplicate"));
        assert!(RawConfig::parse("nonsense\n").is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = RawConfig::parse("x = 1\ny = 2\n").unwrap();
        let b = RawConfig::parse("# c\ny=2\n\nx  =  1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.set("seed", 3);
        assert_ne!(a.hash(), c.hash());
    }
}
