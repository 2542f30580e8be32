use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use crate::datagen::{ExposureStack, ExposureTag};
use crate::error::Result;
use crate::image::{batch_tensor, HdrImage};

/// Denominator floor of the fusion operator.
pub const FUSION_EPS: f64 = 1e-6;

/// Factor between neighbouring exposures of the stack.
pub const EXPOSURE_STEP: f64 = 4.0;

/// Brightens an LDR image by one exposure step: `clip(4x, 0, 1)`.
pub fn brightness_convert(x: &Tensor) -> Result<Tensor> {
    Ok((x * EXPOSURE_STEP)?.clamp(0.0, 1.0)?)
}

/// `Λ` applied to `z = 2x - 1` before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda {
    /// `z`: rejects bright pixels.
    Identity,
    /// `|z|`: rejects both extremes.
    Abs,
    /// `-z`: rejects dark pixels.
    Neg,
}

impl Lambda {
    pub fn apply_scalar(self, z: f64) -> f64 {
        match self {
            Lambda::Identity => z,
            Lambda::Abs => z.abs(),
            Lambda::Neg => -z,
        }
    }

    fn apply(self, z: &Tensor) -> Result<Tensor> {
        Ok(match self {
            Lambda::Identity => z.clone(),
            Lambda::Abs => z.abs()?,
            Lambda::Neg => z.neg()?,
        })
    }
}

/// Which `Λ` each exposure uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionMapping {
    pub minus2: Lambda,
    pub plus0: Lambda,
    pub plus2: Lambda,
}

impl Default for FusionMapping {
    fn default() -> Self {
        Self {
            minus2: Lambda::Neg,
            plus0: Lambda::Abs,
            plus2: Lambda::Identity,
        }
    }
}

impl FusionMapping {
    pub fn get(&self, ev: ExposureTag) -> Lambda {
        match ev {
            ExposureTag::Minus2 => self.minus2,
            ExposureTag::Plus0 => self.plus0,
            ExposureTag::Plus2 => self.plus2,
        }
    }
}

/// Well-exposedness weights `Φ = 1 - max(Λ(2x - 1), 0)`, elementwise.
pub fn fusion_weights(img: &Tensor, ev: ExposureTag, mapping: &FusionMapping) -> Result<Tensor> {
    let z = img.affine(2.0, -1.0)?;
    let lam = mapping.get(ev).apply(&z)?;
    Ok(lam.relu()?.affine(-1.0, 1.0)?)
}

/// Multi-exposure fusion `Σ Φ·S/n / max(Σ Φ, ε)` of `[S_-2, S_+0, S_+2]`.
pub fn fuse_reference(stack: [&Tensor; 3], mapping: &FusionMapping) -> Result<Tensor> {
    let mut num: Option<Tensor> = None;
    let mut den: Option<Tensor> = None;
    for (ev, s) in ExposureTag::ALL.into_iter().zip(stack) {
        let phi = fusion_weights(s, ev, mapping)?;
        let term = (&phi * (s / ev.gain() as f64)?)?;
        num = Some(match num {
            Some(n) => (n + term)?,
            None => term,
        });
        den = Some(match den {
            Some(d) => (d + phi)?,
            None => phi,
        });
    }
    let (num, den) = (num.expect("three exposures"), den.expect("three exposures"));
    Ok(num.div(&den.clamp(FUSION_EPS, f64::INFINITY)?)?)
}

/// Fusion of an image-level stack, computed in double precision.
pub fn fuse_stack(stack: &ExposureStack, mapping: &FusionMapping) -> Result<HdrImage> {
    let t = |img| batch_tensor(&[img], DType::F64, &Device::Cpu);
    let fused = fuse_reference([&t(&stack.minus2)?, &t(&stack.plus0)?, &t(&stack.plus2)?], mapping)?;
    HdrImage::from_tensor(&fused)
}

/// `mean|H(S_-2) - S_+0| + mean|H(S_+0) - S_+2|`.
pub fn loss_ll(stack: [&Tensor; 3]) -> Result<Tensor> {
    let a = (brightness_convert(stack[0])? - stack[1])?.abs()?.mean_all()?;
    let b = (brightness_convert(stack[1])? - stack[2])?.abs()?.mean_all()?;
    Ok((a + b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(v: f64) -> Tensor {
        Tensor::full(v, (1, 3, 2, 2), &Device::Cpu).unwrap()
    }

    fn scalar(t: &Tensor) -> f64 {
        t.flatten_all().unwrap().to_vec1::<f64>().unwrap()[0]
    }

    #[test]
    fn brightness_examples() {
        assert!((scalar(&brightness_convert(&filled(0.2)).unwrap()) - 0.8).abs() < 1e-12);
        assert_eq!(scalar(&brightness_convert(&filled(0.3)).unwrap()), 1.0);
        assert_eq!(scalar(&brightness_convert(&filled(0.0)).unwrap()), 0.0);
    }

    #[test]
    fn weight_examples() {
        let m = FusionMapping::default();
        assert_eq!(scalar(&fusion_weights(&filled(0.5), ExposureTag::Plus0, &m).unwrap()), 1.0);
        assert_eq!(scalar(&fusion_weights(&filled(1.0), ExposureTag::Plus2, &m).unwrap()), 0.0);
        assert_eq!(scalar(&fusion_weights(&filled(0.0), ExposureTag::Minus2, &m).unwrap()), 0.0);
    }

    #[test]
    fn fusion_examples() {
        let m = FusionMapping::default();
        let h = filled(0.5);
        assert!((scalar(&fuse_reference([&h, &h, &h], &m).unwrap()) - 0.21875).abs() < 1e-12);
        let one = filled(1.0);
        assert!((scalar(&fuse_reference([&h, &h, &one], &m).unwrap()) - 0.3125).abs() < 1e-12);
        // Every weight zero: black short exposure, white mid and long.
        let zero = filled(0.0);
        assert_eq!(scalar(&fuse_reference([&zero, &one, &one], &m).unwrap()), 0.0);
    }

    #[test]
    fn ll_examples() {
        let (a, b, c) = (filled(0.1), filled(0.5), filled(1.0));
        assert!((scalar(&loss_ll([&a, &b, &c]).unwrap()) - 0.1).abs() < 1e-12);
        let z = filled(0.0);
        assert_eq!(scalar(&loss_ll([&z, &z, &z]).unwrap()), 0.0);
        let s0 = filled(0.05);
        let s1 = brightness_convert(&s0).unwrap();
        let s2 = brightness_convert(&s1).unwrap();
        assert!(scalar(&loss_ll([&s0, &s1, &s2]).unwrap()).abs() < 1e-12);
    }
}
