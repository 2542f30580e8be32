use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{HdrImage, LdrImage};

/// Relative exposure of an LDR capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExposureTag {
    #[serde(rename = "-2")]
    Minus2,
    #[serde(rename = "+0")]
    Plus0,
    #[serde(rename = "+2")]
    Plus2,
}

impl ExposureTag {
    pub const ALL: [ExposureTag; 3] = [ExposureTag::Minus2, ExposureTag::Plus0, ExposureTag::Plus2];

    /// Exposure normalization factor `n_ev`: 1, 4 and 16.
    pub fn gain(self) -> f32 {
        match self {
            ExposureTag::Minus2 => 1.0,
            ExposureTag::Plus0 => 4.0,
            ExposureTag::Plus2 => 16.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            ExposureTag::Minus2 => 0,
            ExposureTag::Plus0 => 1,
            ExposureTag::Plus2 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for ExposureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExposureTag::Minus2 => "-2",
            ExposureTag::Plus0 => "+0",
            ExposureTag::Plus2 => "+2",
        })
    }
}

impl FromStr for ExposureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-2" => Ok(ExposureTag::Minus2),
            "+0" | "0" | "-0" => Ok(ExposureTag::Plus0),
            "+2" | "2" => Ok(ExposureTag::Plus2),
            other => Err(Error::invalid(format!("unknown exposure tag {other:?}"))),
        }
    }
}

/// Camera response applied after exposure scaling and clipping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crf {
    /// Clip only. Keeps `S_ev / n_ev` an exact inverse on unclipped pixels.
    #[default]
    Linear,
    /// Clip then encode with `x^(1/2.2)`. Fusion by `S_ev / n_ev` is then only
    /// approximate.
    Gamma,
}

impl Crf {
    pub const GAMMA: f32 = 2.2;

    #[inline]
    pub fn encode(self, v: f32) -> f32 {
        match self {
            Crf::Linear => v,
            Crf::Gamma => v.powf(1.0 / Self::GAMMA),
        }
    }
}

/// Renders an LDR capture of `hdr` at exposure `ev`: `clip(hdr * n_ev, 0, 1)`
/// followed by the camera response.
pub fn decompose_exposure(hdr: &HdrImage, ev: ExposureTag, crf: Crf) -> Result<LdrImage> {
    if hdr.data().iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("HDR radiance must be non-negative"));
    }
    let g = ev.gain();
    Ok(hdr.map(|v| crf.encode((v * g).clamp(0.0, 1.0))))
}

/// Aligned LDR triplet at EV-2, EV+0 and EV+2.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureStack {
    pub minus2: LdrImage,
    pub plus0: LdrImage,
    pub plus2: LdrImage,
}

impl ExposureStack {
    /// Builds a stack, clamping every value into `[0, 1]`.
    pub fn new(minus2: LdrImage, plus0: LdrImage, plus2: LdrImage) -> Result<Self> {
        minus2.ensure_same_shape(&plus0)?;
        minus2.ensure_same_shape(&plus2)?;
        let clamp = |img: LdrImage| img.map(|v| v.clamp(0.0, 1.0));
        Ok(Self {
            minus2: clamp(minus2),
            plus0: clamp(plus0),
            plus2: clamp(plus2),
        })
    }

    pub fn from_hdr(hdr: &HdrImage, crf: Crf) -> Result<Self> {
        Ok(Self {
            minus2: decompose_exposure(hdr, ExposureTag::Minus2, crf)?,
            plus0: decompose_exposure(hdr, ExposureTag::Plus0, crf)?,
            plus2: decompose_exposure(hdr, ExposureTag::Plus2, crf)?,
        })
    }

    pub fn get(&self, ev: ExposureTag) -> &LdrImage {
        match ev {
            ExposureTag::Minus2 => &self.minus2,
            ExposureTag::Plus0 => &self.plus0,
            ExposureTag::Plus2 => &self.plus2,
        }
    }

    /// Normalization factors `(n_-2, n_+0, n_+2)`.
    pub fn gains() -> [f32; 3] {
        ExposureTag::ALL.map(ExposureTag::gain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use proptest::prelude::*;

    fn stack_at(v: f32) -> [f32; 3] {
        let s = ExposureStack::from_hdr(&Image::filled(3, 1, 1, v), Crf::Linear).unwrap();
        [s.minus2.get(0, 0, 0), s.plus0.get(0, 0, 0), s.plus2.get(0, 0, 0)]
    }

    #[test]
    fn hand_evaluated_stacks() {
        let s = stack_at(0.05);
        for (a, b) in s.iter().zip([0.05, 0.20, 0.80]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(stack_at(0.0), [0.0, 0.0, 0.0]);
        assert_eq!(stack_at(0.5), [0.5, 1.0, 1.0]);
    }

    #[test]
    fn negative_radiance_rejected() {
        let img = Image::filled(3, 1, 1, -0.1);
        assert!(decompose_exposure(&img, ExposureTag::Plus0, Crf::Linear).is_err());
    }

    #[test]
    fn gamma_encodes_after_clipping() {
        let img = Image::filled(1, 1, 1, 0.25);
        let out = decompose_exposure(&img, ExposureTag::Minus2, Crf::Gamma).unwrap();
        assert!((out.get(0, 0, 0) - 0.25f32.powf(1.0 / 2.2)).abs() < 1e-6);
        let sat = decompose_exposure(&img, ExposureTag::Plus2, Crf::Gamma).unwrap();
        assert_eq!(sat.get(0, 0, 0), 1.0);
    }

    #[test]
    fn tag_text_round_trip() {
        for tag in ExposureTag::ALL {
            assert_eq!(tag.to_string().parse::<ExposureTag>().unwrap(), tag);
        }
        assert!("+4".parse::<ExposureTag>().is_err());
    }

    proptest! {
        #[test]
        fn unclipped_pixels_invert(v in 0.0f32..=1.0, tag in 0usize..3) {
            let tag = ExposureTag::from_index(tag).unwrap();
            let hdr_value = v / tag.gain();
            let img = Image::filled(1, 1, 1, hdr_value);
            let ldr = decompose_exposure(&img, tag, Crf::Linear).unwrap();
            prop_assert!((ldr.get(0, 0, 0) / tag.gain() - hdr_value).abs() < 1e-6);
        }
    }
}
