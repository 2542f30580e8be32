use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakNormalization {
    /// Values are used as-is and clipped to `[0, 1]`.
    Fixed1,
    /// Each image is divided by its own maximum.
    PerImageMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToneMapConfig {
    pub mu: f64,
    pub normalization: PeakNormalization,
}

impl Default for ToneMapConfig {
    fn default() -> Self {
        Self {
            mu: 5000.0,
            normalization: PeakNormalization::PerImageMax,
        }
    }
}

/// `log(1 + μx) / log(1 + μ)`.
#[inline]
pub fn mu_law(x: f64, mu: f64) -> f64 {
    (mu * x).ln_1p() / mu.ln_1p()
}

/// Normalizes `hdr` per `cfg` and applies the μ-law curve.
pub fn mu_tonemap(hdr: &Image, cfg: &ToneMapConfig) -> Result<Image> {
    if !(cfg.mu > 0.0) {
        return Err(Error::config("μ must be positive"));
    }
    if hdr.data().iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("tone mapping needs non-negative input"));
    }
    let scale = match cfg.normalization {
        PeakNormalization::Fixed1 => 1.0,
        PeakNormalization::PerImageMax => {
            let peak = hdr.max_value() as f64;
            if peak > 0.0 {
                1.0 / peak
            } else {
                1.0
            }
        }
    };
    Ok(hdr.map(|v| mu_law((v as f64 * scale).clamp(0.0, 1.0), cfg.mu) as f32))
}
