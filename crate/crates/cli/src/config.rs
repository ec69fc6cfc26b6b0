//! `key = value` configuration files. Keys are the long flag names, with
//! `-` and `_` interchangeable; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "gamma0",
    "sigma",
    "edges",
    "no-edges",
    "smoothing",
    "no-smoothing",
    "truncate-4x4",
    "eq1",
    "canny-high",
    "canny-low-ratio",
    "canny-sigma",
    "prob-threshold",
    "workers",
    "dump-plan",
    "dump-edges",
    "dump-processed",
    "gt-dir",
    "compare-edges",
    "seeds",
    "size",
    "output",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("config: {}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow!("config: {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", n + 1);
            }
            values.insert(key, value.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config: `{key} = {v}`: {e}")))
            .transpose()
    }

    /// Command-line value if given, otherwise the configured one.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Resolves a `--x` / `--no-x` flag pair against `x` / `no-x` keys.
    pub fn switch(&self, on: bool, off: bool, key: &str, default: bool) -> Result<bool> {
        if off {
            return Ok(false);
        }
        if on {
            return Ok(true);
        }
        if let Some(v) = self.get::<bool>(key)? {
            return Ok(v);
        }
        if let Some(v) = self.get::<bool>(&format!("no-{key}"))? {
            return Ok(!v);
        }
        Ok(default)
    }

    /// For plain flags that can only switch something on.
    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}
