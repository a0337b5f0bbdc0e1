//! The shared `key = value` calibration file.
//!
//! ```text
//! # faster network
//! hop_cycles = 1.0
//! use_ipi_get = true
//! ```
//!
//! Keys are the [`CostModel`] field names plus the two runtime feature flags.

use std::path::Path;

use thiserror::Error;

use crate::mesh::CostModel;

/// Runtime switches that select between algorithm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Features {
    /// Implement `barrier_all` with the WAND signal instead of the dissemination barrier.
    pub use_wand_barrier: bool,
    /// Serve gets larger than [`crate::shmem::IPI_GET_THRESHOLD`] by interrupting the owner.
    pub use_ipi_get: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RuntimeConfig {
    pub cost: CostModel,
    pub features: Features,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("{0} must be positive and finite")]
    Invalid(&'static str),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

impl RuntimeConfig {
    /// Applies the entries of `text` on top of `self`.
    pub fn apply_str(mut self, text: &str) -> Result<Self, ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.into(),
                });
            }
            let bad = || ConfigError::BadValue {
                line,
                key: key.into(),
                value: value.into(),
            };
            match key {
                "use_wand_barrier" => {
                    self.features.use_wand_barrier = parse_bool(value).ok_or_else(bad)?
                }
                "use_ipi_get" => self.features.use_ipi_get = parse_bool(value).ok_or_else(bad)?,
                _ if CostModel::KEYS.contains(&key) => {
                    let v: f64 = value.parse().map_err(|_| bad())?;
                    self.cost.set(key, v);
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.into(),
                    })
                }
            }
        }
        self.cost.validate().map_err(ConfigError::Invalid)?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::default().apply_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
