use std::collections::{BTreeMap, HashMap};

use candle_core::backprop::GradStore;
use candle_core::{Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction and externally supplied learning rate.
///
/// Moment estimates are keyed by parameter name so they can be saved and
/// restored alongside the parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    steps: u64,
    moments: BTreeMap<String, (Tensor, Tensor)>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            steps: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update to every parameter in `params` that has a
    /// gradient. Parameters absent from the graph are left untouched.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = (&'a String, &'a Var)>,
        grads: &GradStore,
        lr: f64,
    ) -> Result<()> {
        self.steps += 1;
        let t = self.steps as i32;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (name, var) in params {
            let Some(g) = grads.get(var) else { continue };
            let g = g.detach();
            let g = &g;
            let (m, v) = match self.moments.get(name) {
                Some((m, v)) => (m.clone(), v.clone()),
                None => (g.zeros_like()?, g.zeros_like()?),
            };
            let m = ((m * beta1)? + (g * (1.0 - beta1))?)?;
            let v = ((v * beta2)? + (g.sqr()? * (1.0 - beta2))?)?;
            let denom = (v.affine(1.0 / bc2, 0.0)?.sqrt()? + eps)?;
            let update = (m.affine(lr / bc1, 0.0)? / denom)?;
            var.set(&(var.as_tensor() - update)?)?;
            self.moments.insert(name.clone(), (m.detach(), v.detach()));
        }
        Ok(())
    }

    /// Moment tensors as `{prefix}m.{name}` / `{prefix}v.{name}`.
    pub fn export(&self, prefix: &str) -> Vec<(String, Tensor)> {
        let mut out = Vec::with_capacity(2 * self.moments.len());
        for (name, (m, v)) in &self.moments {
            out.push((format!("{prefix}m.{name}"), m.clone()));
            out.push((format!("{prefix}v.{name}"), v.clone()));
        }
        out
    }

    /// Restores state written by [`Adam::export`].
    pub fn import(&mut self, tensors: &HashMap<String, Tensor>, prefix: &str, steps: u64) -> Result<()> {
        self.moments.clear();
        let m_prefix = format!("{prefix}m.");
        for (key, m) in tensors {
            if let Some(name) = key.strip_prefix(&m_prefix) {
                let v_key = format!("{prefix}v.{name}");
                let v = tensors
                    .get(&v_key)
                    .ok_or_else(|| Error::invalid(format!("checkpoint lacks {v_key}")))?;
                self.moments.insert(name.to_string(), (m.clone(), v.clone()));
            }
        }
        self.steps = steps;
        Ok(())
    }
}
