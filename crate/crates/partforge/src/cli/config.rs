//! Run configuration: a line-based key=value config file merged with CLI
//! flags, with unknown keys rejected and the resolved form logged.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::env::ActionCaps;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Key=value settings from an optional config file plus flag overrides.
/// Every read registers the key as known; [`RunConfig::finish`] rejects any
/// leftover unknown keys and returns the fully-resolved listing.
#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    known: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(CliError::Config(format!(
                        "{}:{}: expected key=value",
                        path.display(),
                        lineno + 1
                    )));
                };
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self { values, ..Default::default() })
    }

    /// Read a key: flag override wins, then config file, then default.
    pub fn get<T: std::str::FromStr + std::fmt::Display>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        self.known.borrow_mut().insert(key.to_string());
        let value = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.values.get(key) {
            raw.parse().map_err(|_| {
                CliError::Config(format!("config key '{key}': cannot parse '{raw}'"))
            })?
        } else {
            default
        };
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Reject unknown config keys and return the resolved `key=value` lines.
    pub fn finish(&self) -> Result<String, CliError> {
        let known = self.known.borrow();
        let unknown: Vec<&String> =
            self.values.keys().filter(|k| !known.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!(
                "unknown config keys: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )));
        }
        let mut out = String::new();
        for (k, v) in self.resolved.borrow().iter() {
            writeln!(out, "{k}={v}").unwrap();
        }
        Ok(out)
    }
}

/// Parse "P,K,W" caps.
pub fn parse_caps(s: &str) -> Result<ActionCaps, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!("caps '{s}': expected P,K,W")));
    }
    let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse()).collect();
    let nums = nums.map_err(|_| CliError::Config(format!("caps '{s}': not integers")))?;
    Ok(ActionCaps { p: nums[0], k: nums[1], w: nums[2] })
}

/// Write the resolved config next to a command's artifacts.
pub fn write_resolved(dir: &Path, resolved: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io)?;
    std::fs::write(dir.join("config.resolved.txt"), resolved).map_err(CliError::io)
}
