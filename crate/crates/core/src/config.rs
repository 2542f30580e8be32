//! Run configuration: TOML sections with built-in defaults, a config file
//! layer and dotted `key=value` overrides on top.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{CorpusConfig, SimulatorConfig};
use crate::error::{Error, Result};
use crate::losses::{FusionMapping, LossWeights};
use crate::metrics::ToneMapConfig;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    pub loss: LossWeights,
    pub fusion: FusionMapping,
    pub train: TrainConfig,
    pub sim: SimulatorConfig,
    pub corpus: CorpusConfig,
    pub tonemap: ToneMapConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.loss.validate()?;
        self.train.validate()?;
        self.sim.validate()?;
        self.corpus.validate()?;
        if !(self.tonemap.mu > 0.0) {
            return Err(Error::config("tonemap.mu must be positive"));
        }
        Ok(())
    }

    /// Parses TOML text. Missing keys take their defaults; unknown keys are
    /// errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::layered(Some(text), &[])
    }

    /// Defaults, then `file` (TOML text), then `overrides` of the form
    /// `section.key=value`. The result is validated.
    pub fn layered(file: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut root = match file {
            Some(text) => text
                .parse::<toml::Table>()
                .map_err(|e| Error::config(format!("config parse error: {e}")))?,
            None => toml::Table::new(),
        };
        for ov in overrides {
            apply_override(&mut root, ov)?;
        }
        let cfg: Config = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => None,
        };
        Self::layered(text.as_deref(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Sets `a.b.c = value` in `root`. The value is read as a TOML literal and
/// falls back to a bare string.
fn apply_override(root: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("bad override key {key:?}")));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut table = root;
    for p in path {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override {key:?}: {p} is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
