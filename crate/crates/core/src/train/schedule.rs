use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// All networks trained jointly on static scenes.
    Pretrain,
    /// Composition network frozen, trained on the whole corpus.
    Full,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Pretrain => "pretrain",
            Stage::Full => "full",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Stage::Pretrain),
            "full" => Ok(Stage::Full),
            _ => Err(Error::config(format!("unknown stage {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub decay_start_epoch: usize,
    pub batch_size: usize,
    /// Side of the square random crop; rounded down to a multiple of 4 and
    /// to the sample size.
    pub crop: usize,
    pub stage: Stage,
    pub seed: u64,
    /// Stop after this many optimizer steps in the run. 0 means no limit.
    pub max_steps: u64,
    /// Learning rate of the critic relative to the generator.
    pub disc_lr_scale: f64,
    pub disc_channels: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr0: 2e-4,
            decay_start_epoch: 100,
            batch_size: 4,
            crop: 64,
            stage: Stage::Pretrain,
            seed: 0,
            max_steps: 0,
            disc_lr_scale: 1.0,
            disc_channels: 16,
        }
    }
}

impl TrainConfig {
    /// `0 < decay_start_epoch < epochs` unless `epochs` is 0, which is an
    /// allowed no-op run.
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::config("train.lr0 must be positive"));
        }
        if self.epochs > 0 && !(self.decay_start_epoch > 0 && self.decay_start_epoch < self.epochs) {
            return Err(Error::config(
                "train.decay_start_epoch must satisfy 0 < decay_start_epoch < epochs",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size must be positive"));
        }
        if self.crop < 4 {
            return Err(Error::config("train.crop must be at least 4"));
        }
        if !(self.disc_lr_scale >= 0.0) {
            return Err(Error::config("train.disc_lr_scale must be non-negative"));
        }
        if self.disc_channels == 0 {
            return Err(Error::config("train.disc_channels must be positive"));
        }
        Ok(())
    }
}

/// Constant `lr0` until `decay_start_epoch`, then linear decay to 0 at
/// `epochs`.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> Result<f64> {
    if epoch > cfg.epochs {
        return Err(Error::invalid(format!("epoch {epoch} beyond {} epochs", cfg.epochs)));
    }
    if epoch < cfg.decay_start_epoch {
        return Ok(cfg.lr0);
    }
    let span = (cfg.epochs - cfg.decay_start_epoch) as f64;
    Ok(cfg.lr0 * (cfg.epochs - epoch) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let cfg = TrainConfig::default();
        assert_eq!(lr_schedule(0, &cfg).unwrap(), 2e-4);
        assert!((lr_schedule(150, &cfg).unwrap() - 1e-4).abs() < 1e-18);
        assert_eq!(lr_schedule(200, &cfg).unwrap(), 0.0);
        assert_eq!(lr_schedule(99, &cfg).unwrap(), lr_schedule(100, &cfg).unwrap());
        assert!(lr_schedule(201, &cfg).is_err());
        let mut last = f64::INFINITY;
        for e in 0..=200 {
            let lr = lr_schedule(e, &cfg).unwrap();
            assert!(lr <= last);
            last = lr;
        }
    }

    #[test]
    fn validation() {
        let bad = TrainConfig {
            decay_start_epoch: 200,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let zero = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(zero.validate().is_ok());
        assert!(TrainConfig { lr0: 0.0, ..TrainConfig::default() }.validate().is_err());
    }
}
