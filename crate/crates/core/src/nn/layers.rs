use candle_core::{Tensor, Var};

use super::params::Init;
use crate::error::Result;

/// Negative slope used by every leaky activation in the networks.
pub const LEAKY_SLOPE: f64 = 0.2;

pub fn leaky_relu(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::leaky_relu(x, LEAKY_SLOPE)?)
}

/// `log(1 + exp(beta * x)) / beta`, evaluated without overflow.
pub fn softplus(x: &Tensor, beta: f64) -> Result<Tensor> {
    let bx = (x * beta)?;
    let tail = bx.abs()?.neg()?.exp()?.affine(1.0, 1.0)?.log()?;
    Ok(((bx.relu()? + tail)? / beta)?)
}

/// Nearest-neighbour upsampling of `(B, C, H, W)` by an integer factor,
/// built from broadcasting so its gradient is a plain reduction.
pub fn upsample_nearest(x: &Tensor, factor: usize) -> Result<Tensor> {
    let (b, c, h, w) = x.dims4()?;
    Ok(x
        .reshape((b, c, h, 1, w, 1))?
        .broadcast_as((b, c, h, factor, w, factor))?
        .reshape((b, c, h * factor, w * factor))?)
}

/// 2-D convolution with bias over `(B, C, H, W)` tensors.
#[derive(Debug, Clone)]
pub struct Conv2d {
    weight: Var,
    bias: Var,
    stride: usize,
    padding: usize,
}

impl Conv2d {
    /// He-initialized convolution for leaky-ReLU networks, with the
    /// standard deviation multiplied by `scale`. "Same" padding.
    pub fn new(
        init: &mut Init<'_>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        scale: f64,
    ) -> Result<Self> {
        let fan_in = (in_ch * kernel * kernel) as f64;
        let gain = (2.0 / (1.0 + LEAKY_SLOPE * LEAKY_SLOPE)).sqrt();
        let weight = init.normal("weight", (out_ch, in_ch, kernel, kernel), scale * gain / fan_in.sqrt())?;
        let bias = init.zeros("bias", out_ch)?;
        Ok(Self {
            weight,
            bias,
            stride,
            padding: kernel / 2,
        })
    }

    pub fn weight(&self) -> &Var {
        &self.weight
    }

    pub fn bias(&self) -> &Var {
        &self.bias
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(&self.weight, self.padding, self.stride, 1, 1)?;
        let b = self.bias.as_tensor().reshape((1, self.out_channels(), 1, 1))?;
        Ok(y.broadcast_add(&b)?)
    }
}

/// `x + conv(lrelu(conv(x)))`.
#[derive(Debug, Clone)]
pub struct ResBlock {
    conv1: Conv2d,
    conv2: Conv2d,
}

impl ResBlock {
    pub fn new(init: &mut Init<'_>, channels: usize, kernel: usize) -> Result<Self> {
        Ok(Self {
            conv1: Conv2d::new(&mut init.pp("conv1"), channels, channels, kernel, 1, 1.0)?,
            conv2: Conv2d::new(&mut init.pp("conv2"), channels, channels, kernel, 1, 0.1)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = self.conv2.forward(&leaky_relu(&self.conv1.forward(x)?)?)?;
        Ok((x + y)?)
    }
}
