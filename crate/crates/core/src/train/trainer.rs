use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use candle_core::{DType, Device};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::framework::{Batch, Framework, PreparedSample};
use super::schedule::{lr_schedule, Stage};
use crate::config::Config;
use crate::datagen::{Corpus, SceneKind};
use crate::error::{Error, Result};
use crate::losses::LossBreakdown;
use crate::model::DOWNSAMPLE_FACTOR;
use crate::nn::{Adam, AdamConfig};

pub const LOG_FILE: &str = "train_log.jsonl";
pub const FINAL_CHECKPOINT: &str = "final.safetensors";

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    #[serde(flatten)]
    pub losses: LossBreakdown,
}

pub fn epoch_checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:04}.safetensors")
}

/// Alternating generator/critic optimization of a [`Framework`].
#[derive(Debug)]
pub struct Trainer {
    framework: Framework,
    stage: Stage,
    gen_optimizer: Adam,
    epoch: usize,
    step: u64,
}

impl Trainer {
    /// Fresh networks seeded from `cfg.train.seed`.
    pub fn new(cfg: &Config) -> Result<Self> {
        let framework = Framework::new(cfg, DType::F32, &Device::Cpu, cfg.train.seed)?;
        Ok(Self {
            framework,
            stage: cfg.train.stage,
            gen_optimizer: Adam::new(AdamConfig::default()),
            epoch: 0,
            step: 0,
        })
    }

    /// Continues the run recorded in `ckpt` where it stopped. Training
    /// settings come from `cfg`; the network shape must match.
    pub fn resume(ckpt: &Checkpoint, cfg: &Config) -> Result<Self> {
        check_model(ckpt, cfg)?;
        let mut t = Self::start_from(ckpt, cfg, ckpt.stage)?;
        t.epoch = ckpt.epoch;
        t.step = ckpt.step;
        t.gen_optimizer.import(&ckpt.section("opt.gen."), "", ckpt.gen_steps)?;
        t.framework
            .combo
            .disc_optimizer_mut()
            .import(&ckpt.section("opt.disc."), "", ckpt.disc_steps)?;
        Ok(t)
    }

    /// New `stage` initialized from the parameters of `ckpt`, with fresh
    /// optimizer state and counters.
    pub fn start_from(ckpt: &Checkpoint, cfg: &Config, stage: Stage) -> Result<Self> {
        check_model(ckpt, cfg)?;
        let mut snapshot = ckpt.clone();
        snapshot.config = cfg.clone();
        let framework = Framework::from_checkpoint(&snapshot, DType::F32, &Device::Cpu)?;
        Ok(Self {
            framework,
            stage,
            gen_optimizer: Adam::new(AdamConfig::default()),
            epoch: 0,
            step: 0,
        })
    }

    pub fn framework(&self) -> &Framework {
        &self.framework
    }

    pub fn into_framework(self) -> Framework {
        self.framework
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    fn config(&self) -> &Config {
        &self.framework.config
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let mut tensors: std::collections::HashMap<_, _> = self.framework.named_tensors().into_iter().collect();
        for (k, v) in self.gen_optimizer.export("opt.gen.") {
            tensors.insert(k, v);
        }
        let disc_opt = self.framework.combo.disc_optimizer();
        for (k, v) in disc_opt.export("opt.disc.") {
            tensors.insert(k, v);
        }
        Ok(Checkpoint {
            config: self.config().clone(),
            stage: self.stage,
            epoch: self.epoch,
            step: self.step,
            seed: self.framework.seed,
            gen_steps: self.gen_optimizer.steps(),
            disc_steps: disc_opt.steps(),
            tensors,
        })
    }

    /// One generator update followed by one critic update.
    pub fn train_step(&mut self, batch: &Batch, lr: f64) -> Result<LossBreakdown> {
        let fw = &self.framework;
        let out = fw.forward(batch)?;
        let (loss, breakdown) = fw.loss(batch, &out)?;
        if !breakdown.total.is_finite() {
            return Err(Error::invalid(format!("non-finite loss at step {}", self.step)));
        }
        let grads = loss.backward()?;
        let params = fw.generator_params(self.stage == Stage::Pretrain);
        self.gen_optimizer.step(params.iter().map(|(k, v)| (k, v)), &grads, lr)?;
        let train = &fw.config.train;
        let disc_lr = lr * train.disc_lr_scale;
        if fw.config.loss.w_gan > 0.0 && disc_lr > 0.0 {
            let pairs = fw.adversarial_pairs(batch, &out)?;
            if !pairs.is_empty() {
                self.framework.combo.discriminator_step(&pairs, disc_lr)?;
            }
        }
        Ok(breakdown)
    }

    /// Trains until `train.epochs` or `train.max_steps` is reached. With
    /// `out_dir`, appends to the JSON-lines log and writes a checkpoint per
    /// finished epoch plus a final one.
    pub fn run(&mut self, data: &[PreparedSample], out_dir: Option<&Path>) -> Result<Vec<StepRecord>> {
        if data.is_empty() {
            return Err(Error::invalid("training corpus is empty"));
        }
        let cfg = self.config().train.clone();
        let size = crop_size(data, cfg.crop)?;
        let mut log = match out_dir {
            Some(dir) => Some(open_log(dir)?),
            None => None,
        };
        let mut records = Vec::new();
        let dtype = DType::F32;
        let dev = Device::Cpu;
        let stage_stream = match self.stage {
            Stage::Pretrain => 0u64,
            Stage::Full => 1u64 << 32,
        };
        let limit_hit = |step: u64| cfg.max_steps > 0 && step >= cfg.max_steps;
        while self.epoch < cfg.epochs && !limit_hit(self.step) {
            let lr = lr_schedule(self.epoch, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stage_stream + self.epoch as u64);
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                if limit_hit(self.step) {
                    break;
                }
                let samples: Vec<&PreparedSample> = chunk.iter().map(|&i| &data[i]).collect();
                let corners: Vec<(usize, usize)> = samples
                    .iter()
                    .map(|s| {
                        let (h, w) = s.resolution();
                        (rng.random_range(0..=h - size), rng.random_range(0..=w - size))
                    })
                    .collect();
                let batch = Batch::new(&samples, &corners, size, dtype, &dev)?;
                let losses = self.train_step(&batch, lr)?;
                self.step += 1;
                let rec = StepRecord { step: self.step, losses };
                if let Some((w, path)) = log.as_mut() {
                    writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(|e| Error::io(path.as_path(), e))?;
                }
                log::debug!("step {} total {:.5}", rec.step, rec.losses.total);
                records.push(rec);
            }
            if limit_hit(self.step) && self.step % (data.len().div_ceil(cfg.batch_size) as u64) != 0 {
                // Stopped inside an epoch; it does not count as finished.
                break;
            }
            self.epoch += 1;
            if let Some(dir) = out_dir {
                self.checkpoint()?.save(&dir.join(epoch_checkpoint_name(self.epoch)))?;
            }
        }
        if let Some((w, path)) = log.as_mut() {
            w.flush().map_err(|e| Error::io(path.as_path(), e))?;
        }
        if let Some(dir) = out_dir {
            self.checkpoint()?.save(&dir.join(FINAL_CHECKPOINT))?;
        }
        Ok(records)
    }
}

fn check_model(ckpt: &Checkpoint, cfg: &Config) -> Result<()> {
    if ckpt.config.model != cfg.model {
        return Err(Error::config(
            "model section differs from the one stored in the checkpoint",
        ));
    }
    Ok(())
}

fn open_log(dir: &Path) -> Result<(BufWriter<File>, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(LOG_FILE);
    let f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    Ok((BufWriter::new(f), path))
}

/// Largest multiple of 4 not above `crop` or the smallest sample side.
fn crop_size(data: &[PreparedSample], crop: usize) -> Result<usize> {
    let min_side = data
        .iter()
        .map(|s| {
            let (h, w) = s.resolution();
            h.min(w)
        })
        .min()
        .expect("non-empty");
    let size = crop.min(min_side) / DOWNSAMPLE_FACTOR * DOWNSAMPLE_FACTOR;
    if size == 0 {
        return Err(Error::invalid(format!(
            "samples of side {min_side} are too small to crop"
        )));
    }
    Ok(size)
}

fn prepare(corpus: &Corpus, bins: usize) -> Result<Vec<PreparedSample>> {
    corpus.samples().map(|s| PreparedSample::new(s, bins)).collect()
}

/// First stage: every network trained jointly on static scenes.
pub fn pretrain_stage(corpus: &Corpus, cfg: &Config, out_dir: Option<&Path>) -> Result<(Trainer, Vec<StepRecord>)> {
    if corpus.is_empty() {
        return Err(Error::invalid("pre-training corpus is empty"));
    }
    if corpus.records.iter().any(|r| r.scene != SceneKind::Static) {
        return Err(Error::invalid("pre-training expects static scenes only"));
    }
    let data = prepare(corpus, cfg.model.temporal_bins)?;
    let mut trainer = Trainer::new(&Config {
        train: super::TrainConfig {
            stage: Stage::Pretrain,
            ..cfg.train.clone()
        },
        ..cfg.clone()
    })?;
    let records = trainer.run(&data, out_dir)?;
    Ok((trainer, records))
}

/// Second stage: starts from `init` and keeps the composition network
/// frozen.
pub fn train_full(
    corpus: &Corpus,
    init: &Checkpoint,
    cfg: &Config,
    out_dir: Option<&Path>,
) -> Result<(Trainer, Vec<StepRecord>)> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let data = prepare(corpus, cfg.model.temporal_bins)?;
    let full_cfg = Config {
        train: super::TrainConfig {
            stage: Stage::Full,
            ..cfg.train.clone()
        },
        ..cfg.clone()
    };
    let mut trainer = Trainer::start_from(init, &full_cfg, Stage::Full)?;
    let records = trainer.run(&data, out_dir)?;
    Ok((trainer, records))
}
