use candle_core::{DType, Device, Tensor, Var};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use crate::config::Config;
use crate::datagen::{ExposureTag, TrainingSample};
use crate::error::{Error, Result};
use crate::image::{batch_tensor, HdrImage, Image};
use crate::losses::{total_loss, ComboContext, Domain, LossBreakdown, LossInputs};
use crate::model::{prepare_grids, Drc, DrcOutput, Drd, Eb2shOutputs, Ebl2Sh, DOWNSAMPLE_FACTOR};
use crate::nn::ParamStore;

/// Independent sub-seed `k` of `seed`.
pub(crate) fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng.next_u64()
}

/// A training sample with its voxel grids precomputed at the observation
/// time. Grids are stored as `2m`-channel images so they crop like frames.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub ldr: Image,
    pub obs: Image,
    pub obs_ev: ExposureTag,
    pub full: Image,
    pub left: Image,
    pub right: Image,
}

fn grid_image(g: &crate::events::EventVoxelGrid) -> Result<Image> {
    let (c, h, w) = g.shape();
    Image::from_vec(c, h, w, g.data().iter().map(|&v| v as f32).collect())
}

impl PreparedSample {
    pub fn new(sample: &TrainingSample, bins: usize) -> Result<Self> {
        sample.validate()?;
        let grids = prepare_grids(&sample.events, sample.obs_time, bins)?;
        Ok(Self {
            ldr: sample.blurry_ldr.clone(),
            obs: sample.obs_image.clone(),
            obs_ev: sample.obs_ev,
            full: grid_image(&grids.full)?,
            left: grid_image(&grids.left)?,
            right: grid_image(&grids.right)?,
        })
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.ldr.height(), self.ldr.width())
    }

    fn crop(&self, y: usize, x: usize, size: usize) -> Result<Self> {
        Ok(Self {
            ldr: self.ldr.crop(y, x, size, size)?,
            obs: self.obs.crop(y, x, size, size)?,
            obs_ev: self.obs_ev,
            full: self.full.crop(y, x, size, size)?,
            left: self.left.crop(y, x, size, size)?,
            right: self.right.crop(y, x, size, size)?,
        })
    }
}

/// Network-ready mini-batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub ldr: Tensor,
    pub full: Tensor,
    pub left: Tensor,
    pub right: Tensor,
    pub obs: Tensor,
    pub obs_ev: Vec<ExposureTag>,
}

impl Batch {
    /// Stacks samples cropped to `size` at the given corners.
    pub fn new(samples: &[&PreparedSample], corners: &[(usize, usize)], size: usize, dtype: DType, device: &Device) -> Result<Self> {
        if samples.len() != corners.len() || samples.is_empty() {
            return Err(Error::invalid("batch needs one crop corner per sample"));
        }
        let crops = samples
            .iter()
            .zip(corners)
            .map(|(s, &(y, x))| s.crop(y, x, size))
            .collect::<Result<Vec<_>>>()?;
        let stack = |f: &dyn Fn(&PreparedSample) -> &Image| -> Result<Tensor> {
            let imgs: Vec<&Image> = crops.iter().map(f).collect();
            batch_tensor(&imgs, dtype, device)
        };
        Ok(Self {
            ldr: stack(&|s| &s.ldr)?,
            full: stack(&|s| &s.full)?,
            left: stack(&|s| &s.left)?,
            right: stack(&|s| &s.right)?,
            obs: stack(&|s| &s.obs)?,
            obs_ev: crops.iter().map(|s| s.obs_ev).collect(),
        })
    }

    /// Whole samples without cropping.
    pub fn uncropped(samples: &[&PreparedSample], dtype: DType, device: &Device) -> Result<Self> {
        let (h, w) = samples
            .first()
            .ok_or_else(|| Error::invalid("empty batch"))?
            .resolution();
        if h != w {
            return Err(Error::invalid("uncropped batches need square samples"));
        }
        Self::new(samples, &vec![(0, 0); samples.len()], h, dtype, device)
    }
}

/// Forward products of all three networks for one batch.
#[derive(Debug, Clone)]
pub struct FrameworkOutputs {
    pub main: Eb2shOutputs,
    pub stack: [Tensor; 3],
    pub composed: DrcOutput,
}

/// The main branch, the assistance networks and the loss context.
#[derive(Debug)]
pub struct Framework {
    pub config: Config,
    pub seed: u64,
    pub ebl2sh: Ebl2Sh,
    pub drd: Drd,
    pub drc: Drc,
    pub combo: ComboContext,
}

pub(crate) const SECTIONS: [&str; 5] = ["ebl2sh.", "drd.", "drc.", "disc.", "perc."];

impl Framework {
    pub fn new(config: &Config, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        config.validate()?;
        let m = &config.model;
        Ok(Self {
            config: config.clone(),
            seed,
            ebl2sh: Ebl2Sh::new(m, dtype, device, derive_seed(seed, 1))?,
            drd: Drd::new(m, dtype, device, derive_seed(seed, 2))?,
            drc: Drc::new(m, dtype, device, derive_seed(seed, 3))?,
            combo: ComboContext::new(
                config.loss.combo(),
                config.tonemap.mu,
                config.train.disc_channels,
                dtype,
                device,
                derive_seed(seed, 4),
            )?,
        })
    }

    /// Rebuilds the networks described by `ckpt` and loads its parameters.
    pub fn from_checkpoint(ckpt: &Checkpoint, dtype: DType, device: &Device) -> Result<Self> {
        let fw = Self::new(&ckpt.config, dtype, device, ckpt.seed)?;
        for (prefix, store) in SECTIONS.iter().zip(fw.stores()) {
            store.load(&ckpt.tensors, prefix)?;
        }
        Ok(fw)
    }

    fn stores(&self) -> [&ParamStore; 5] {
        [
            self.ebl2sh.params(),
            self.drd.params(),
            self.drc.params(),
            self.combo.discriminator().params(),
            self.combo.extractor().params(),
        ]
    }

    /// Every parameter tensor under its section prefix.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (prefix, store) in SECTIONS.iter().zip(self.stores()) {
            for (name, var) in store.vars() {
                out.push((format!("{prefix}{name}"), var.as_tensor().clone()));
            }
        }
        out
    }

    /// Parameters updated by the generator optimizer. The composition
    /// network is included only when `train_drc` is set.
    pub fn generator_params(&self, train_drc: bool) -> Vec<(String, Var)> {
        let mut stores = vec![("ebl2sh.", self.ebl2sh.params()), ("drd.", self.drd.params())];
        if train_drc {
            stores.push(("drc.", self.drc.params()));
        }
        stores
            .into_iter()
            .flat_map(|(p, s)| s.vars().iter().map(move |(k, v)| (format!("{p}{k}"), v.clone())))
            .collect()
    }

    pub fn forward(&self, batch: &Batch) -> Result<FrameworkOutputs> {
        let main = self.ebl2sh.forward(&batch.ldr, &batch.full, &batch.left, &batch.right)?;
        let stack = self.drd.forward(&main.hdr_pred)?;
        let composed = self.drc.forward([&stack[0], &stack[1], &stack[2]])?;
        Ok(FrameworkOutputs { main, stack, composed })
    }

    pub fn loss(&self, batch: &Batch, out: &FrameworkOutputs) -> Result<(Tensor, LossBreakdown)> {
        let inputs = LossInputs {
            stack: [&out.stack[0], &out.stack[1], &out.stack[2]],
            obs: &batch.obs,
            obs_ev: &batch.obs_ev,
            composed: &out.composed.hdr,
            hdr_pred: &out.main.hdr_pred,
        };
        total_loss(&inputs, &self.config.loss, &self.config.fusion, &self.combo)
    }

    /// `(real, fake)` pairs the critic learns to separate, one per active
    /// loss term with a distance.
    pub fn adversarial_pairs(&self, batch: &Batch, out: &FrameworkOutputs) -> Result<Vec<(Tensor, Tensor, Domain)>> {
        let w = &self.config.loss;
        let mut pairs = Vec::new();
        if w.l1 > 0.0 {
            let s = [&out.stack[0], &out.stack[1], &out.stack[2]];
            let fake = crate::losses::select_exposure(s, &batch.obs_ev)?;
            pairs.push((batch.obs.clone(), fake.detach(), Domain::Ldr));
        }
        if w.l3 > 0.0 {
            let s = [&out.stack[0], &out.stack[1], &out.stack[2]];
            let fused = crate::losses::fuse_reference(s, &self.config.fusion)?;
            pairs.push((fused.detach(), out.composed.hdr.detach(), Domain::Hdr));
        }
        if w.l4 > 0.0 {
            pairs.push((out.composed.hdr.detach(), out.main.hdr_pred.detach(), Domain::Hdr));
        }
        Ok(pairs)
    }

    /// `Î(t)` for one sample.
    pub fn reconstruct(&self, sample: &TrainingSample, t: f64) -> Result<HdrImage> {
        let (h, w) = sample.resolution();
        if h % DOWNSAMPLE_FACTOR != 0 || w % DOWNSAMPLE_FACTOR != 0 {
            return Err(Error::invalid(format!(
                "sample size {h}x{w} is not a multiple of {DOWNSAMPLE_FACTOR}"
            )));
        }
        self.ebl2sh.reconstruct(&sample.blurry_ldr, &sample.events, t)
    }
}

/// `k` uniformly spaced timestamps over `span`, endpoints included; the
/// midpoint when `k` is 1.
pub fn sequence_timestamps(span: (f64, f64), k: usize) -> Result<Vec<f64>> {
    let (t0, t1) = span;
    match k {
        0 => Err(Error::invalid("frame count must be at least 1")),
        1 => Ok(vec![0.5 * (t0 + t1)]),
        _ => Ok((0..k)
            .map(|i| {
                if i == k - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (k - 1) as f64
                }
            })
            .collect()),
    }
}

/// `k` sharp HDR frames at uniformly spaced timestamps across the exposure.
pub fn infer_sequence(framework: &Framework, sample: &TrainingSample, k: usize) -> Result<Vec<HdrImage>> {
    sequence_timestamps(sample.events.span(), k)?
        .into_iter()
        .map(|t| framework.reconstruct(sample, t))
        .collect()
}
