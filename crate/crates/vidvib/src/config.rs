//! Plain `key=value` run configuration. Keys are the long flag names (`f-min` or
//! `f_min`); repeatable flags such as `roi` may appear on several lines. Flags on the
//! command line take precedence over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "input",
    "out",
    "roi",
    "kernel",
    "sigma",
    "f-min",
    "window",
    "mm-per-px",
    "harris-k",
    "harris-window",
    "harris-threshold",
    "nms-radius",
    "max-modes",
    "min-sep",
    "epsilon",
    "alpha",
    "band",
    "auto",
    "mode",
    "ods-line",
    "ods-points",
    "per-point",
    "pattern",
    "amp",
    "freq",
    "phase0",
    "direction-deg",
    "fps",
    "dur",
    "width",
    "height",
    "scale-px",
    "noise",
    "seed",
    "signal",
    "axis",
    "a",
    "b",
    "threads",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", i + 1));
            }
            values.entry(key).or_default().push(value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn all(&self, key: &str) -> &[String] {
        self.values.get(key).map_or(&[], Vec::as_slice)
    }

    /// Last value given for `key`, parsed.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.all(key).last() {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("config `{key}`: cannot parse `{v}`"))),
        }
    }

    /// The flag if given, else the file value, else `None`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(self.resolve(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        self.resolve(flag, key)?
            .ok_or_else(|| CliError::config(format!("`--{key}` is required")))
    }

    /// Boolean switch: set by the flag or by `key=true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }

    /// Repeatable option: the flags if any were given, otherwise the file's lines.
    pub fn list(&self, flags: &[String], key: &str) -> Vec<String> {
        if flags.is_empty() {
            self.all(key).to_vec()
        } else {
            flags.to_vec()
        }
    }
}
