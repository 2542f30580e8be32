use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{leaky_relu, Adam, AdamConfig, Conv2d, Init, ParamStore};

/// Seed of the frozen perceptual encoder. Fixed so every run compares
/// features in the same space.
const EXTRACTOR_SEED: u64 = 0x70e2_cea1;

/// Value range seen by a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Already in `[0, 1]`.
    Ldr,
    /// Linear radiance, μ-law compressed before the feature and adversarial
    /// terms.
    Hdr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComboWeights {
    pub w_l1: f64,
    pub w_perc: f64,
    pub w_gan: f64,
}

impl Default for ComboWeights {
    fn default() -> Self {
        Self {
            w_l1: 1.0,
            w_perc: 0.1,
            w_gan: 0.01,
        }
    }
}

/// Frozen convolutional encoder returning the activations of each stage.
#[derive(Debug)]
pub struct FeatureExtractor {
    params: ParamStore,
    layers: Vec<Conv2d>,
}

impl FeatureExtractor {
    pub fn new(dtype: DType, device: &Device) -> Result<Self> {
        let mut params = ParamStore::new(dtype, device);
        let mut rng = ChaCha8Rng::seed_from_u64(EXTRACTOR_SEED);
        let mut init = Init::new(&mut params, &mut rng);
        let layers = vec![
            Conv2d::new(&mut init.pp("conv0"), 3, 16, 3, 1, 1.0)?,
            Conv2d::new(&mut init.pp("conv1"), 16, 32, 3, 2, 1.0)?,
            Conv2d::new(&mut init.pp("conv2"), 32, 32, 3, 2, 1.0)?,
        ];
        Ok(Self { params, layers })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn features(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            h = leaky_relu(&layer.forward(&h)?)?;
            out.push(h.clone());
        }
        Ok(out)
    }
}

/// Patch-level critic: two stride-2 convolutions and a one-channel head.
#[derive(Debug)]
pub struct Discriminator {
    params: ParamStore,
    layers: Vec<Conv2d>,
    head: Conv2d,
}

impl Discriminator {
    pub fn new(channels: usize, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        let mut params = ParamStore::new(dtype, device);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init::new(&mut params, &mut rng);
        let layers = vec![
            Conv2d::new(&mut init.pp("conv0"), 3, channels, 3, 2, 1.0)?,
            Conv2d::new(&mut init.pp("conv1"), channels, 2 * channels, 3, 2, 1.0)?,
        ];
        let head = Conv2d::new(&mut init.pp("head"), 2 * channels, 1, 3, 1, 1.0)?;
        Ok(Self { params, layers, head })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Per-patch realness scores.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = leaky_relu(&layer.forward(&h)?)?;
        }
        self.head.forward(&h)
    }
}

/// Everything `combo_distance` needs besides its inputs.
#[derive(Debug)]
pub struct ComboContext {
    pub weights: ComboWeights,
    /// μ of the compression applied to HDR inputs.
    pub mu: f64,
    extractor: FeatureExtractor,
    discriminator: Discriminator,
    disc_optimizer: Adam,
}

impl ComboContext {
    pub fn new(weights: ComboWeights, mu: f64, disc_channels: usize, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        if [weights.w_l1, weights.w_perc, weights.w_gan].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("combo weights must be non-negative"));
        }
        if !(mu > 0.0) {
            return Err(Error::config("μ must be positive"));
        }
        Ok(Self {
            weights,
            mu,
            extractor: FeatureExtractor::new(dtype, device)?,
            discriminator: Discriminator::new(disc_channels, dtype, device, seed)?,
            disc_optimizer: Adam::new(AdamConfig::default()),
        })
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn disc_optimizer(&self) -> &Adam {
        &self.disc_optimizer
    }

    pub fn disc_optimizer_mut(&mut self) -> &mut Adam {
        &mut self.disc_optimizer
    }

    /// Maps inputs into the range the feature and adversarial terms expect.
    pub fn to_display(&self, x: &Tensor, domain: Domain) -> Result<Tensor> {
        match domain {
            Domain::Ldr => Ok(x.clone()),
            Domain::Hdr => Ok((x.relu()?.affine(self.mu, 1.0)?.log()? / self.mu.ln_1p())?),
        }
    }

    /// `w_l1·L1 + w_perc·Σ feature L1 + w_gan·LSGAN generator term`.
    /// Disabled terms are not evaluated.
    pub fn distance(&self, pred: &Tensor, target: &Tensor, domain: Domain) -> Result<Tensor> {
        if pred.dims() != target.dims() {
            return Err(Error::shape(target.dims(), pred.dims()));
        }
        let w = self.weights;
        let mut total = Tensor::zeros((), pred.dtype(), pred.device())?;
        if w.w_l1 > 0.0 {
            total = (total + ((pred - target)?.abs()?.mean_all()? * w.w_l1)?)?;
        }
        if w.w_perc > 0.0 || w.w_gan > 0.0 {
            let p = self.to_display(pred, domain)?;
            if w.w_perc > 0.0 {
                let t = self.to_display(target, domain)?;
                let fp = self.extractor.features(&p)?;
                let ft = self.extractor.features(&t)?;
                for (a, b) in fp.iter().zip(&ft) {
                    total = (total + ((a - b)?.abs()?.mean_all()? * w.w_perc)?)?;
                }
            }
            if w.w_gan > 0.0 {
                let score = self.discriminator.forward(&p)?;
                total = (total + (score.affine(1.0, -1.0)?.sqr()?.mean_all()? * w.w_gan)?)?;
            }
        }
        let v = total.to_dtype(DType::F64)?.to_scalar::<f64>()?;
        if !v.is_finite() {
            return Err(Error::invalid("combo distance is not finite"));
        }
        Ok(total)
    }

    /// Least-squares critic objective over `(real, fake, domain)` triples;
    /// inputs are detached.
    pub fn discriminator_loss(&self, pairs: &[(Tensor, Tensor, Domain)]) -> Result<Tensor> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::invalid("discriminator step needs at least one pair"))?;
        let mut total = Tensor::zeros((), first.0.dtype(), first.0.device())?;
        for (real, fake, domain) in pairs {
            let r = self.discriminator.forward(&self.to_display(&real.detach(), *domain)?)?;
            let f = self.discriminator.forward(&self.to_display(&fake.detach(), *domain)?)?;
            let term = (r.affine(1.0, -1.0)?.sqr()?.mean_all()? + f.sqr()?.mean_all()?)?;
            total = (total + term)?;
        }
        Ok((total / pairs.len() as f64)?)
    }

    /// One critic update. Only discriminator parameters move.
    pub fn discriminator_step(&mut self, pairs: &[(Tensor, Tensor, Domain)], lr: f64) -> Result<f64> {
        let loss = self.discriminator_loss(pairs)?;
        let grads = loss.backward()?;
        self.disc_optimizer.step(self.discriminator.params.vars(), &grads, lr)?;
        Ok(loss.to_dtype(DType::F64)?.to_scalar::<f64>()?)
    }
}
