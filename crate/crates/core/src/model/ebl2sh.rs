use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::blocks::{DenseFusion, EventTransform, ImageTransform, Mrfr};
use super::{check_input, check_same_spatial, ModelConfig};
use crate::datagen::ExposureTag;
use crate::error::{Error, Result};
use crate::events::{voxelize, voxelize_window, EventStream, EventVoxelGrid};
use crate::image::{HdrImage, LdrImage};
use crate::nn::{leaky_relu, softplus, Conv2d, Init, ParamStore};

/// Forward products of the main branch. All tensors are `(B, C, H, W)`.
#[derive(Debug, Clone)]
pub struct Eb2shOutputs {
    /// `Î(t)`, non-negative linear HDR, 3 channels.
    pub hdr_pred: Tensor,
    /// `F_H`.
    pub fused_features: Tensor,
    pub residual_left: Tensor,
    pub residual_right: Tensor,
}

/// Voxel grids of the whole exposure and of the two halves split at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGrids {
    pub full: EventVoxelGrid,
    pub left: EventVoxelGrid,
    pub right: EventVoxelGrid,
}

/// Voxelizes `stream` over its span and over `[t0, t]` and `[t, t1]`.
pub fn prepare_grids(stream: &EventStream, t: f64, bins: usize) -> Result<EventGrids> {
    let span = stream.span();
    if !(t >= span.0 && t <= span.1) {
        return Err(Error::invalid(format!(
            "timestamp {t} outside exposure span [{}, {}]",
            span.0, span.1
        )));
    }
    let full = voxelize(stream, bins, span)?;
    let (l, r) = stream.split_at(t)?;
    Ok(EventGrids {
        full,
        left: voxelize_window(&l, bins, l.span())?,
        right: voxelize_window(&r, bins, r.span())?,
    })
}

/// Stacks grids into a `(B, 2m, H, W)` tensor.
pub fn grid_batch(grids: &[&EventVoxelGrid], dtype: DType, device: &Device) -> Result<Tensor> {
    let ts = grids
        .iter()
        .map(|g| g.to_tensor(dtype, device))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tensor::stack(&ts, 0)?)
}

/// The main branch: a deblurring-and-range-extension stage (DRE) producing
/// `F_H` and a modulation stage (MD) that injects events on each side of
/// the timestamp through a shared event transform and a shared MRFR.
#[derive(Debug)]
pub struct Ebl2Sh {
    cfg: ModelConfig,
    params: ParamStore,
    image_transform: ImageTransform,
    event_transform: EventTransform,
    fusion: DenseFusion,
    side_event_transform: EventTransform,
    mrfr: Mrfr,
    head1: Conv2d,
    head2: Conv2d,
}

impl Ebl2Sh {
    pub fn new(cfg: &ModelConfig, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.base_channels;
        let ev_ch = 2 * cfg.temporal_bins;
        let mut params = ParamStore::new(dtype, device);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init::new(&mut params, &mut rng);
        let image_transform = ImageTransform::new(&mut init.pp("t_i"), c)?;
        let event_transform =
            EventTransform::new(&mut init.pp("t_e"), ev_ch, c, cfg.deformable, cfg.deformable_groups)?;
        let fusion = DenseFusion::new(&mut init.pp("drf"), 2 * c, c)?;
        let side_event_transform =
            EventTransform::new(&mut init.pp("t_e_md"), ev_ch, c, cfg.deformable, cfg.deformable_groups)?;
        let mrfr = Mrfr::new(&mut init.pp("mrfr"), c, cfg.mrfr_kernel_sizes)?;
        let head1 = Conv2d::new(&mut init.pp("head1"), c, c, 3, 1, 1.0)?;
        let head2 = Conv2d::new(&mut init.pp("head2"), c, 3, 3, 1, 0.1)?;
        Ok(Self {
            cfg: cfg.clone(),
            params,
            image_transform,
            event_transform,
            fusion,
            side_event_transform,
            mrfr,
            head1,
            head2,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `T_E^L`. The same object as [`Self::event_transform_right`].
    pub fn event_transform_left(&self) -> &EventTransform {
        &self.side_event_transform
    }

    /// `T_E^R`.
    pub fn event_transform_right(&self) -> &EventTransform {
        &self.side_event_transform
    }

    /// `F_H` from a `(B, 3, H, W)` blurry frame and a `(B, 2m, H, W)` grid.
    pub fn dre_forward(&self, ldr: &Tensor, grid: &Tensor) -> Result<Tensor> {
        check_input(ldr, 3, "blurry frame")?;
        check_input(grid, 2 * self.cfg.temporal_bins, "voxel grid")?;
        check_same_spatial(ldr, grid, "blurry frame and voxel grid")?;
        let zi = self.image_transform.forward(ldr)?;
        let ze = self.event_transform.forward(grid)?;
        self.fusion.forward(&Tensor::cat(&[&zi, &ze], 1)?)
    }

    /// Modulates `F_H` with the left and right grids and decodes `Î(t)`.
    /// `ldr` feeds the optional image skip path.
    pub fn md_forward(&self, ldr: &Tensor, fused: &Tensor, left: &Tensor, right: &Tensor) -> Result<Eb2shOutputs> {
        let bins = 2 * self.cfg.temporal_bins;
        check_input(fused, self.cfg.base_channels, "fused features")?;
        check_input(left, bins, "left voxel grid")?;
        check_input(right, bins, "right voxel grid")?;
        check_same_spatial(fused, left, "features and left grid")?;
        check_same_spatial(fused, right, "features and right grid")?;
        let zl = self.event_transform_left().forward(left)?;
        let zr = self.event_transform_right().forward(right)?;
        let rl = self.mrfr.forward(fused, &zl)?;
        let rr = self.mrfr.forward(fused, &zr)?;
        let sum = ((fused + &rl)? + &rr)?;
        let mut pre = self.head2.forward(&leaky_relu(&self.head1.forward(&sum)?)?)?;
        if self.cfg.image_skip {
            check_same_spatial(fused, ldr, "features and blurry frame")?;
            pre = (pre + (ldr / ExposureTag::Plus0.gain() as f64)?)?;
        }
        Ok(Eb2shOutputs {
            hdr_pred: softplus(&pre, self.cfg.output_beta)?,
            fused_features: fused.clone(),
            residual_left: rl,
            residual_right: rr,
        })
    }

    pub fn forward(&self, ldr: &Tensor, full: &Tensor, left: &Tensor, right: &Tensor) -> Result<Eb2shOutputs> {
        let fused = self.dre_forward(ldr, full)?;
        self.md_forward(ldr, &fused, left, right)
    }

    /// Sharp HDR frame at `t` for a single blurry frame and its events.
    pub fn reconstruct(&self, ldr: &LdrImage, events: &EventStream, t: f64) -> Result<HdrImage> {
        if (ldr.height(), ldr.width()) != events.resolution() {
            return Err(Error::shape((ldr.height(), ldr.width()), events.resolution()));
        }
        let grids = prepare_grids(events, t, self.cfg.temporal_bins)?;
        let (dtype, dev) = (self.params.dtype(), self.params.device().clone());
        let x = ldr.to_tensor(dtype, &dev)?.unsqueeze(0)?;
        let g = |grid: &EventVoxelGrid| -> Result<Tensor> { Ok(grid.to_tensor(dtype, &dev)?.unsqueeze(0)?) };
        let out = self.forward(&x, &g(&grids.full)?, &g(&grids.left)?, &g(&grids.right)?)?;
        HdrImage::from_tensor(&out.hdr_pred)
    }
}
