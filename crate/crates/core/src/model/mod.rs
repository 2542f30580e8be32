//! The reconstruction networks: E-BL2SH (blurry LDR + events → sharp HDR at
//! a timestamp), the dynamic range decomposition network (DRD) and the
//! attention-weighted dynamic range composition network (DRC).

mod blocks;
mod drc;
mod drd;
mod ebl2sh;

pub use blocks::{DenseFusion, EventTransform, ImageTransform, Mrfr, ResidualDenseBlock};
pub use drc::{Drc, DrcOutput};
pub use drd::Drd;
pub use ebl2sh::{grid_batch, prepare_grids, Eb2shOutputs, Ebl2Sh, EventGrids};

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial sizes must be divisible by this factor.
pub const DOWNSAMPLE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub base_channels: usize,
    pub temporal_bins: usize,
    pub mrfr_kernel_sizes: [usize; 3],
    pub drd_blocks: usize,
    pub deformable_groups: usize,
    /// `false` replaces the deformable event convolution by a plain one.
    /// This is a fidelity reduction.
    pub deformable: bool,
    /// Sharpness of the softplus output activations.
    pub output_beta: f64,
    /// Adds the exposure-normalized input frame to the HDR head's
    /// pre-activation.
    pub image_skip: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            base_channels: 32,
            temporal_bins: crate::events::DEFAULT_TEMPORAL_BINS,
            mrfr_kernel_sizes: [3, 5, 7],
            drd_blocks: 4,
            deformable_groups: 1,
            deformable: true,
            output_beta: 100.0,
            image_skip: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_channels < 8 {
            return Err(Error::config("model.base_channels must be at least 8"));
        }
        if self.base_channels % 2 != 0 {
            return Err(Error::config("model.base_channels must be even"));
        }
        if self.temporal_bins == 0 {
            return Err(Error::config("model.temporal_bins must be positive"));
        }
        if self.mrfr_kernel_sizes.iter().any(|k| k % 2 == 0) {
            return Err(Error::config("model.mrfr_kernel_sizes must be odd"));
        }
        if self.deformable_groups == 0 || self.base_channels % self.deformable_groups != 0 {
            return Err(Error::config(
                "model.deformable_groups must divide model.base_channels",
            ));
        }
        if !(self.output_beta > 0.0) {
            return Err(Error::config("model.output_beta must be positive"));
        }
        Ok(())
    }
}

/// Checks a `(B, C, H, W)` tensor's channel count and spatial size.
pub(crate) fn check_input(t: &Tensor, channels: usize, what: &str) -> Result<(usize, usize, usize)> {
    let dims = t.dims();
    if dims.len() != 4 || dims[1] != channels {
        return Err(Error::invalid(format!(
            "{what}: expected (B, {channels}, H, W), got {dims:?}"
        )));
    }
    let (b, h, w) = (dims[0], dims[2], dims[3]);
    if h % DOWNSAMPLE_FACTOR != 0 || w % DOWNSAMPLE_FACTOR != 0 || h == 0 || w == 0 {
        return Err(Error::invalid(format!(
            "{what}: spatial size {h}x{w} must be a positive multiple of {DOWNSAMPLE_FACTOR}"
        )));
    }
    Ok((b, h, w))
}

pub(crate) fn check_same_spatial(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    let (da, db) = (a.dims(), b.dims());
    if da.len() != 4 || db.len() != 4 || da[0] != db[0] || da[2..] != db[2..] {
        return Err(Error::invalid(format!("{what}: {da:?} and {db:?} disagree")));
    }
    Ok(())
}
