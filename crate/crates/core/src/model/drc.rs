use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::blocks::softmax_channels;
use super::{check_input, check_same_spatial, ModelConfig};
use crate::datagen::{ExposureStack, ExposureTag};
use crate::error::Result;
use crate::image::{batch_tensor, HdrImage};
use crate::nn::{leaky_relu, softplus, Conv2d, Init, ParamStore};

#[derive(Debug, Clone)]
pub struct DrcOutput {
    /// `I'(t)`, `(B, 3, H, W)`, non-negative.
    pub hdr: Tensor,
    /// One spatial map per exposure, `(B, 3, H, W)`, softmax-normalized over
    /// dimension 1.
    pub attention: Tensor,
}

#[derive(Debug)]
struct Encoder {
    conv1: Conv2d,
    conv2: Conv2d,
}

/// Dynamic range composition: per-exposure encoders, a spatial attention
/// map per exposure and an attention-weighted merge decoded to HDR. The
/// decoder output is a correction on top of the attention-weighted mean of
/// the exposure-normalized inputs.
#[derive(Debug)]
pub struct Drc {
    params: ParamStore,
    encoders: Vec<Encoder>,
    attention: Conv2d,
    dec1: Conv2d,
    dec2: Conv2d,
    beta: f64,
}

impl Drc {
    pub fn new(cfg: &ModelConfig, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.base_channels;
        let mut params = ParamStore::new(dtype, device);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init::new(&mut params, &mut rng);
        let encoders = ExposureTag::ALL
            .iter()
            .map(|ev| {
                let mut e = init.pp(&format!("enc{}", ev.index()));
                Ok(Encoder {
                    conv1: Conv2d::new(&mut e.pp("conv1"), 6, c, 3, 1, 1.0)?,
                    conv2: Conv2d::new(&mut e.pp("conv2"), c, c, 3, 1, 1.0)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let attention = Conv2d::new(&mut init.pp("attention"), 3 * c, 3, 3, 1, 1.0)?;
        let dec1 = Conv2d::new(&mut init.pp("dec1"), c, c, 3, 1, 1.0)?;
        let dec2 = Conv2d::new(&mut init.pp("dec2"), c, 3, 3, 1, 0.1)?;
        Ok(Self {
            params,
            encoders,
            attention,
            dec1,
            dec2,
            beta: cfg.output_beta,
        })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Composes `[Ŝ_-2, Ŝ_+0, Ŝ_+2]`, each `(B, 3, H, W)`.
    pub fn forward(&self, stack: [&Tensor; 3]) -> Result<DrcOutput> {
        for s in stack {
            check_input(s, 3, "exposure stack element")?;
            check_same_spatial(stack[0], s, "exposure stack")?;
        }
        let gains = ExposureStack::gains();
        let mut feats = Vec::with_capacity(3);
        let mut linear = Vec::with_capacity(3);
        for (i, enc) in self.encoders.iter().enumerate() {
            let lin = (stack[i] / gains[i] as f64)?;
            let x = Tensor::cat(&[stack[i], &lin], 1)?;
            feats.push(leaky_relu(&enc.conv2.forward(&leaky_relu(&enc.conv1.forward(&x)?)?)?)?);
            linear.push(lin);
        }
        let attention = softmax_channels(&self.attention.forward(&Tensor::cat(&feats, 1)?)?)?;
        let mut merged: Option<Tensor> = None;
        let mut base: Option<Tensor> = None;
        for i in 0..3 {
            let a = attention.narrow(1, i, 1)?;
            let f = feats[i].broadcast_mul(&a)?;
            let l = linear[i].broadcast_mul(&a)?;
            merged = Some(match merged {
                Some(m) => (m + f)?,
                None => f,
            });
            base = Some(match base {
                Some(b) => (b + l)?,
                None => l,
            });
        }
        let (merged, base) = (merged.expect("three exposures"), base.expect("three exposures"));
        let correction = self.dec2.forward(&leaky_relu(&self.dec1.forward(&merged)?)?)?;
        Ok(DrcOutput {
            hdr: softplus(&(correction + base)?, self.beta)?,
            attention,
        })
    }

    pub fn compose(&self, stack: &ExposureStack) -> Result<HdrImage> {
        let (dt, dev) = (self.params.dtype(), self.params.device());
        let t = |img| batch_tensor(&[img], dt, dev);
        let out = self.forward([&t(&stack.minus2)?, &t(&stack.plus0)?, &t(&stack.plus2)?])?;
        HdrImage::from_tensor(&out.hdr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attention_normalized_and_output_non_negative() {
        let cfg = ModelConfig {
            base_channels: 8,
            ..ModelConfig::default()
        };
        let drc = Drc::new(&cfg, DType::F32, &Device::Cpu, 5).unwrap();
        let s: Vec<Tensor> = (0..3)
            .map(|i| (Tensor::rand(0.0f32, 1.0, (2, 3, 8, 12), &Device::Cpu).unwrap() * ((i as f64 + 1.0) / 3.0)).unwrap())
            .collect();
        let out = drc.forward([&s[0], &s[1], &s[2]]).unwrap();
        assert_eq!(out.hdr.dims(), &[2, 3, 8, 12]);
        assert_eq!(out.attention.dims(), &[2, 3, 8, 12]);
        let sums = out.attention.sum(1).unwrap().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-5));
        let hdr = out.hdr.flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert!(hdr.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }
}
