//! The four self-supervised consistency losses, the combo distance they are
//! measured with, and the analytic multi-exposure fusion operator.

mod combo;
mod fusion;

pub use combo::{ComboContext, ComboWeights, Discriminator, Domain, FeatureExtractor};
pub use fusion::{
    brightness_convert, fuse_reference, fuse_stack, fusion_weights, loss_ll, FusionMapping, Lambda,
    EXPOSURE_STEP, FUSION_EPS,
};

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::datagen::ExposureTag;
use crate::error::{Error, Result};

/// `λ1..λ4` of the total objective plus the combo sub-weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    /// Stack element vs sharp observation.
    pub l1: f64,
    /// Exposure consistency inside the stack.
    pub l2: f64,
    /// Composed HDR vs fusion reference.
    pub l3: f64,
    /// Main-branch HDR vs composed HDR.
    pub l4: f64,
    pub w_l1: f64,
    pub w_perc: f64,
    pub w_gan: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        let c = ComboWeights::default();
        Self {
            l1: 1.0,
            l2: 1.0,
            l3: 1.0,
            l4: 1.0,
            w_l1: c.w_l1,
            w_perc: c.w_perc,
            w_gan: c.w_gan,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.l1, self.l2, self.l3, self.l4, self.w_l1, self.w_perc, self.w_gan];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::config("loss weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn combo(&self) -> ComboWeights {
        ComboWeights {
            w_l1: self.w_l1,
            w_perc: self.w_perc,
            w_gan: self.w_gan,
        }
    }

    pub fn lambdas(&self) -> [f64; 4] {
        [self.l1, self.l2, self.l3, self.l4]
    }
}

/// Picks, per batch element, the stack entry matching its exposure tag.
/// Unselected entries get exactly zero gradient.
pub fn select_exposure(stack: [&Tensor; 3], evs: &[ExposureTag]) -> Result<Tensor> {
    let b = stack[0].dim(0)?;
    if evs.len() != b {
        return Err(Error::invalid(format!("{} exposure tags for a batch of {b}", evs.len())));
    }
    let mut out: Option<Tensor> = None;
    for (i, s) in stack.iter().enumerate() {
        let sel: Vec<f64> = evs.iter().map(|e| if e.index() == i { 1.0 } else { 0.0 }).collect();
        if sel.iter().all(|v| *v == 0.0) {
            continue;
        }
        let mask = Tensor::from_vec(sel, (b, 1, 1, 1), s.device())?.to_dtype(s.dtype())?;
        let term = s.broadcast_mul(&mask)?;
        out = Some(match out {
            Some(o) => (o + term)?,
            None => term,
        });
    }
    out.ok_or_else(|| Error::invalid("empty batch"))
}

/// Distance between each observation and the stack entry of its exposure.
pub fn loss_hl(stack: [&Tensor; 3], obs: &Tensor, evs: &[ExposureTag], ctx: &ComboContext) -> Result<Tensor> {
    let pred = select_exposure(stack, evs)?;
    ctx.distance(&pred, obs, Domain::Ldr)
}

/// Composed HDR against the fusion reference, which is a fixed target.
pub fn loss_lh(fused_ref: &Tensor, composed: &Tensor, ctx: &ComboContext) -> Result<Tensor> {
    ctx.distance(composed, &fused_ref.detach(), Domain::Hdr)
}

/// Main-branch HDR against the composed HDR, which is a fixed target.
pub fn loss_hh(composed: &Tensor, hdr_pred: &Tensor, ctx: &ComboContext) -> Result<Tensor> {
    ctx.distance(hdr_pred, &composed.detach(), Domain::Hdr)
}

/// Outputs of one forward pass that the objective consumes.
#[derive(Debug, Clone)]
pub struct LossInputs<'a> {
    /// `[Ŝ_-2, Ŝ_+0, Ŝ_+2]` from the decomposition network.
    pub stack: [&'a Tensor; 3],
    pub obs: &'a Tensor,
    pub obs_ev: &'a [ExposureTag],
    /// `I'(t)` from the composition network.
    pub composed: &'a Tensor,
    /// `Î(t)` from the main branch.
    pub hdr_pred: &'a Tensor,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    #[serde(rename = "L_HL")]
    pub hl: f64,
    #[serde(rename = "L_LL")]
    pub ll: f64,
    #[serde(rename = "L_LH")]
    pub lh: f64,
    #[serde(rename = "L_HH")]
    pub hh: f64,
    pub total: f64,
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

/// `λ1·L_HL + λ2·L_LL + λ3·L_LH + λ4·L_HH`. Terms with `λ = 0` are not
/// evaluated and are reported as exactly zero.
pub fn total_loss(
    inputs: &LossInputs<'_>,
    weights: &LossWeights,
    mapping: &FusionMapping,
    ctx: &ComboContext,
) -> Result<(Tensor, LossBreakdown)> {
    weights.validate()?;
    let [l1, l2, l3, l4] = weights.lambdas();
    let mut total = Tensor::zeros((), inputs.hdr_pred.dtype(), inputs.hdr_pred.device())?;
    let mut b = LossBreakdown::default();
    if l1 > 0.0 {
        let t = loss_hl(inputs.stack, inputs.obs, inputs.obs_ev, ctx)?;
        b.hl = scalar(&t)?;
        total = (total + (t * l1)?)?;
    }
    if l2 > 0.0 {
        let t = loss_ll(inputs.stack)?;
        b.ll = scalar(&t)?;
        total = (total + (t * l2)?)?;
    }
    if l3 > 0.0 {
        let fused = fuse_reference(inputs.stack, mapping)?;
        let t = loss_lh(&fused, inputs.composed, ctx)?;
        b.lh = scalar(&t)?;
        total = (total + (t * l3)?)?;
    }
    if l4 > 0.0 {
        let t = loss_hh(inputs.composed, inputs.hdr_pred, ctx)?;
        b.hh = scalar(&t)?;
        total = (total + (t * l4)?)?;
    }
    b.total = scalar(&total)?;
    Ok((total, b))
}
