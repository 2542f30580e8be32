use candle_core::{DType, Tensor, Var};

use super::layers::Conv2d;
use super::params::Init;
use crate::error::{Error, Result};

/// Modulated deformable convolution.
///
/// A plain convolution predicts, per output pixel and kernel tap, a 2-D
/// sampling offset and a sigmoid modulation mask. Inputs are sampled
/// bilinearly (zero outside the image) at the displaced tap positions, scaled
/// by the mask and combined with the kernel weights. Offsets and masks are
/// shared within each of `groups` channel groups.
#[derive(Debug, Clone)]
pub struct DeformConv2d {
    weight: Var,
    bias: Var,
    offset_conv: Conv2d,
    kernel: usize,
    groups: usize,
}

impl DeformConv2d {
    pub fn new(init: &mut Init<'_>, in_ch: usize, out_ch: usize, kernel: usize, groups: usize) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::config("deformable kernel size must be odd"));
        }
        if groups == 0 || in_ch % groups != 0 {
            return Err(Error::config(format!(
                "{in_ch} channels cannot be split into {groups} deformable groups"
            )));
        }
        let kk = kernel * kernel;
        let fan_in = (in_ch * kk) as f64;
        let gain = (2.0f64 / 1.04).sqrt();
        let weight = init.normal("weight", (out_ch, in_ch, kernel, kernel), gain / fan_in.sqrt())?;
        let bias = init.zeros("bias", out_ch)?;
        // Small random offsets keep sampling positions off the integer grid
        // from the first step, where bilinear interpolation is not smooth.
        let offset_conv = Conv2d::new(&mut init.pp("offset"), in_ch, 3 * groups * kk, 3, 1, 0.01)?;
        Ok(Self {
            weight,
            bias,
            offset_conv,
            kernel,
            groups,
        })
    }

    pub fn weight(&self) -> &Var {
        &self.weight
    }

    /// Offsets `(B, 2·G·K², H, W)` and masks `(B, G·K², H, W)` predicted from
    /// `x`. Offsets are laid out per group as `[dy_0..dy_K², dx_0..dx_K²]`.
    pub fn offsets_and_mask(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let kk = self.kernel * self.kernel;
        let g = self.groups;
        let om = self.offset_conv.forward(x)?;
        let offsets = om.narrow(1, 0, 2 * g * kk)?;
        let mask = candle_nn::ops::sigmoid(&om.narrow(1, 2 * g * kk, g * kk)?)?;
        Ok((offsets, mask))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (offsets, mask) = self.offsets_and_mask(x)?;
        self.forward_with(x, &offsets, &mask)
    }

    /// Convolution with externally supplied offsets and masks.
    pub fn forward_with(&self, x: &Tensor, offsets: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let (b, c, h, w) = x.dims4()?;
        let k = self.kernel;
        let kk = k * k;
        let g = self.groups;
        let in_ch = self.weight.dims()[1];
        if c != in_ch {
            return Err(Error::shape(in_ch, c));
        }
        if offsets.dims() != [b, 2 * g * kk, h, w] || mask.dims() != [b, g * kk, h, w] {
            return Err(Error::shape(
                [b, 2 * g * kk, h, w],
                format!("{:?} / {:?}", offsets.dims(), mask.dims()),
            ));
        }
        let cg = c / g;
        let (base_y, base_x) = tap_grid(k, h, w, x.dtype(), x)?;
        let mut cols = Vec::with_capacity(g);
        for gi in 0..g {
            let xg = x.narrow(1, gi * cg, cg)?.contiguous()?.reshape((b, cg, h * w))?;
            let dy = offsets.narrow(1, gi * 2 * kk, kk)?;
            let dx = offsets.narrow(1, gi * 2 * kk + kk, kk)?;
            let m = mask.narrow(1, gi * kk, kk)?;
            let py = dy.broadcast_add(&base_y)?;
            let px = dx.broadcast_add(&base_x)?;
            cols.push(sample_taps(&xg, h, w, &py, &px, &m)?);
        }
        let cols = Tensor::cat(&cols, 1)?;
        let out_ch = self.weight.dims()[0];
        let wmat = self.weight.as_tensor().reshape((out_ch, c * kk))?;
        let y = wmat.broadcast_matmul(&cols)?;
        let y = y.broadcast_add(&self.bias.as_tensor().reshape((1, out_ch, 1))?)?;
        Ok(y.reshape((b, out_ch, h, w))?)
    }
}

/// Undisplaced tap coordinates `(1, K², H, W)` for a centered kernel.
fn tap_grid(k: usize, h: usize, w: usize, dtype: DType, like: &Tensor) -> Result<(Tensor, Tensor)> {
    let r = (k / 2) as f64;
    let n = k * k * h * w;
    let mut ys = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for tap in 0..k * k {
        let (ky, kx) = ((tap / k) as f64, (tap % k) as f64);
        for y in 0..h {
            for x in 0..w {
                ys.push(y as f64 + ky - r);
                xs.push(x as f64 + kx - r);
            }
        }
    }
    let dev = like.device();
    let ys = Tensor::from_vec(ys, (1, k * k, h, w), dev)?.to_dtype(dtype)?;
    let xs = Tensor::from_vec(xs, (1, k * k, h, w), dev)?.to_dtype(dtype)?;
    Ok((ys, xs))
}

/// Bilinear samples of `x: (B, C, H·W)` at positions `(B, K², H, W)`, scaled
/// by the mask. Returns columns `(B, C·K², H·W)` ordered channel-major.
fn sample_taps(x: &Tensor, h: usize, w: usize, py: &Tensor, px: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let (b, c, hw) = x.dims3()?;
    let kk = py.dim(1)?;
    let dtype = x.dtype();
    let y0 = py.detach().floor()?;
    let x0 = px.detach().floor()?;
    let ly = (py - &y0)?;
    let lx = (px - &x0)?;
    let hy = ly.affine(-1.0, 1.0)?;
    let hx = lx.affine(-1.0, 1.0)?;
    let (hm, wm) = ((h - 1) as f64, (w - 1) as f64);
    let mut acc: Option<Tensor> = None;
    for (oy, ox, wy, wx) in [(0.0, 0.0, &hy, &hx), (0.0, 1.0, &hy, &lx), (1.0, 0.0, &ly, &hx), (1.0, 1.0, &ly, &lx)] {
        let yc = y0.affine(1.0, oy)?;
        let xc = x0.affine(1.0, ox)?;
        let valid = (yc.ge(0.0)?.to_dtype(dtype)?
            * yc.le(hm)?.to_dtype(dtype)?
            * xc.ge(0.0)?.to_dtype(dtype)?
            * xc.le(wm)?.to_dtype(dtype)?)?;
        let idx = (yc.clamp(0.0, hm)?.affine(w as f64, 0.0)? + xc.clamp(0.0, wm)?)?
            .to_dtype(DType::U32)?
            .reshape((b, 1, kk * hw))?
            .broadcast_as((b, c, kk * hw))?
            .contiguous()?;
        let vals = x.gather(&idx, 2)?;
        let coef = ((wy * wx)? * valid)?.mul(mask)?.reshape((b, 1, kk * hw))?;
        let term = vals.broadcast_mul(&coef)?;
        acc = Some(match acc {
            None => term,
            Some(a) => (a + term)?,
        });
    }
    Ok(acc.expect("four corners").reshape((b, c * kk, hw))?)
}
