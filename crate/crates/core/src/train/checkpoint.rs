use std::collections::HashMap;
use std::fs;
use std::path::Path;

use candle_core::{Device, Tensor};
use safetensors::SafeTensors;

use super::schedule::Stage;
use crate::config::Config;
use crate::error::{Error, Result};

const FORMAT: &str = "ehdr-checkpoint-1";

/// Every parameter and optimizer moment of a training run, plus the
/// counters and configuration needed to resume it.
///
/// Tensor names are prefixed by owner: `ebl2sh.`, `drd.`, `drc.`, `disc.`,
/// `perc.`, `opt.gen.` and `opt.disc.`.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: Config,
    pub stage: Stage,
    /// Completed epochs of `stage`.
    pub epoch: usize,
    /// Completed optimizer steps of `stage`.
    pub step: u64,
    /// Seed from which every per-epoch random stream is derived.
    pub seed: u64,
    pub gen_steps: u64,
    pub disc_steps: u64,
    pub tensors: HashMap<String, Tensor>,
}

impl Checkpoint {
    fn metadata(&self) -> Result<HashMap<String, String>> {
        let mut m = HashMap::new();
        m.insert("format".into(), FORMAT.into());
        m.insert("config".into(), serde_json::to_string(&self.config)?);
        m.insert("stage".into(), self.stage.to_string());
        m.insert("epoch".into(), self.epoch.to_string());
        m.insert("step".into(), self.step.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("gen_steps".into(), self.gen_steps.to_string());
        m.insert("disc_steps".into(), self.disc_steps.to_string());
        Ok(m)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut entries: Vec<(&String, &Tensor)> = self.tensors.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        safetensors::serialize(entries, Some(self.metadata()?))
            .map_err(|e| Error::invalid(format!("checkpoint serialization failed: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::format(path, reason);
        let (_, meta) = SafeTensors::read_metadata(bytes).map_err(|e| bad(e.to_string()))?;
        let meta = meta
            .metadata()
            .clone()
            .ok_or_else(|| bad("missing checkpoint metadata".into()))?;
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| bad(format!("missing metadata field {k}")))
        };
        if get("format")? != FORMAT {
            return Err(bad("unsupported checkpoint format".into()));
        }
        let num = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| bad(format!("bad metadata field {k}")))
        };
        let config: Config = serde_json::from_str(&get("config")?).map_err(|e| bad(e.to_string()))?;
        let tensors = candle_core::safetensors::load_buffer(bytes, &Device::Cpu)
            .map_err(|e| bad(e.to_string()))?;
        Ok(Self {
            config,
            stage: get("stage")?.parse().map_err(|_| bad("bad stage".into()))?,
            epoch: num("epoch")? as usize,
            step: num("step")?,
            seed: num("seed")?,
            gen_steps: num("gen_steps")?,
            disc_steps: num("disc_steps")?,
            tensors,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Tensors under `prefix`, with the prefix removed.
    pub fn section(&self, prefix: &str) -> HashMap<String, Tensor> {
        self.tensors
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), v.clone())))
            .collect()
    }
}
