use candle_core::Tensor;

use crate::error::Result;
use crate::nn::{leaky_relu, upsample_nearest, Conv2d, DeformConv2d, Init, ResBlock};

/// `T_I`: maps the blurry frame to latent features.
#[derive(Debug, Clone)]
pub struct ImageTransform {
    conv1: Conv2d,
    conv2: Conv2d,
}

impl ImageTransform {
    pub fn new(init: &mut Init<'_>, c: usize) -> Result<Self> {
        Ok(Self {
            conv1: Conv2d::new(&mut init.pp("conv1"), 3, c, 3, 1, 1.0)?,
            conv2: Conv2d::new(&mut init.pp("conv2"), c, c, 3, 1, 1.0)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        leaky_relu(&self.conv2.forward(&leaky_relu(&self.conv1.forward(x)?)?)?)
    }
}

#[derive(Debug, Clone)]
enum EventConv {
    Deformable(DeformConv2d),
    Plain(Conv2d),
}

/// `T_E`: maps a voxel grid to latent features through a deformable
/// convolution.
#[derive(Debug, Clone)]
pub struct EventTransform {
    head: Conv2d,
    body: EventConv,
}

impl EventTransform {
    pub fn new(init: &mut Init<'_>, in_ch: usize, c: usize, deformable: bool, groups: usize) -> Result<Self> {
        let head = Conv2d::new(&mut init.pp("head"), in_ch, c, 3, 1, 1.0)?;
        let body = if deformable {
            EventConv::Deformable(DeformConv2d::new(&mut init.pp("deform"), c, c, 3, groups)?)
        } else {
            EventConv::Plain(Conv2d::new(&mut init.pp("plain"), c, c, 3, 1, 1.0)?)
        };
        Ok(Self { head, body })
    }

    pub fn is_deformable(&self) -> bool {
        matches!(self.body, EventConv::Deformable(_))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = leaky_relu(&self.head.forward(x)?)?;
        let y = match &self.body {
            EventConv::Deformable(d) => d.forward(&h)?,
            EventConv::Plain(p) => p.forward(&h)?,
        };
        leaky_relu(&y)
    }
}

/// Two-level encoder whose decoder stages fuse features from every scale.
#[derive(Debug, Clone)]
pub struct DenseFusion {
    input: Conv2d,
    down1: Conv2d,
    down2: Conv2d,
    res2: ResBlock,
    fuse1: Conv2d,
    res1: ResBlock,
    fuse0: Conv2d,
    res0: ResBlock,
}

impl DenseFusion {
    pub fn new(init: &mut Init<'_>, in_ch: usize, c: usize) -> Result<Self> {
        Ok(Self {
            input: Conv2d::new(&mut init.pp("input"), in_ch, c, 3, 1, 1.0)?,
            down1: Conv2d::new(&mut init.pp("down1"), c, 2 * c, 3, 2, 1.0)?,
            down2: Conv2d::new(&mut init.pp("down2"), 2 * c, 4 * c, 3, 2, 1.0)?,
            res2: ResBlock::new(&mut init.pp("res2"), 4 * c, 3)?,
            fuse1: Conv2d::new(&mut init.pp("fuse1"), 4 * c + 2 * c + c, 2 * c, 1, 1, 1.0)?,
            res1: ResBlock::new(&mut init.pp("res1"), 2 * c, 3)?,
            fuse0: Conv2d::new(&mut init.pp("fuse0"), 2 * c + c + 4 * c, c, 1, 1, 1.0)?,
            res0: ResBlock::new(&mut init.pp("res0"), c, 3)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let e0 = leaky_relu(&self.input.forward(x)?)?;
        let e1 = leaky_relu(&self.down1.forward(&e0)?)?;
        let e2 = self.res2.forward(&leaky_relu(&self.down2.forward(&e1)?)?)?;
        let cat1 = Tensor::cat(
            &[&upsample_nearest(&e2, 2)?, &e1, &e0.avg_pool2d(2)?],
            1,
        )?;
        let d1 = self.res1.forward(&leaky_relu(&self.fuse1.forward(&cat1)?)?)?;
        let cat0 = Tensor::cat(
            &[&upsample_nearest(&d1, 2)?, &e0, &upsample_nearest(&e2, 4)?],
            1,
        )?;
        self.res0.forward(&leaky_relu(&self.fuse0.forward(&cat0)?)?)
    }
}

/// Residual dense block: densely connected convolutions, a 1x1 local fusion
/// and a residual connection.
#[derive(Debug, Clone)]
pub struct ResidualDenseBlock {
    layers: Vec<Conv2d>,
    fuse: Conv2d,
}

const RDB_LAYERS: usize = 3;

impl ResidualDenseBlock {
    pub fn new(init: &mut Init<'_>, c: usize, growth: usize, kernel: usize) -> Result<Self> {
        let layers = (0..RDB_LAYERS)
            .map(|i| Conv2d::new(&mut init.pp(&format!("dense{i}")), c + i * growth, growth, kernel, 1, 1.0))
            .collect::<Result<Vec<_>>>()?;
        let fuse = Conv2d::new(&mut init.pp("fuse"), c + RDB_LAYERS * growth, c, 1, 1, 0.1)?;
        Ok(Self { layers, fuse })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut feats = vec![x.clone()];
        for layer in &self.layers {
            let inp = Tensor::cat(&feats, 1)?;
            feats.push(leaky_relu(&layer.forward(&inp)?)?);
        }
        let fused = self.fuse.forward(&Tensor::cat(&feats, 1)?)?;
        Ok((x + fused)?)
    }
}

/// Multiple-receptive-field residual block: three chained residual dense
/// blocks with different kernel sizes whose outputs are all fused.
#[derive(Debug, Clone)]
pub struct Mrfr {
    input: Conv2d,
    blocks: Vec<ResidualDenseBlock>,
    fuse: Conv2d,
}

impl Mrfr {
    pub fn new(init: &mut Init<'_>, c: usize, kernels: [usize; 3]) -> Result<Self> {
        let input = Conv2d::new(&mut init.pp("input"), 2 * c, c, 1, 1, 1.0)?;
        let blocks = kernels
            .iter()
            .enumerate()
            .map(|(i, &k)| ResidualDenseBlock::new(&mut init.pp(&format!("rdb{i}")), c, c / 2, k))
            .collect::<Result<Vec<_>>>()?;
        let fuse = Conv2d::new(&mut init.pp("fuse"), 3 * c, c, 1, 1, 0.1)?;
        Ok(Self { input, blocks, fuse })
    }

    /// `features` and `events` are `(B, c, H, W)`.
    pub fn forward(&self, features: &Tensor, events: &Tensor) -> Result<Tensor> {
        let x0 = self.input.forward(&Tensor::cat(&[features, events], 1)?)?;
        let mut outs = Vec::with_capacity(self.blocks.len());
        let mut x = x0.clone();
        for block in &self.blocks {
            x = block.forward(&x)?;
            outs.push(x.clone());
        }
        Ok((self.fuse.forward(&Tensor::cat(&outs, 1)?)? + x0)?)
    }
}

/// Softmax over dimension 1.
pub(crate) fn softmax_channels(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    Ok(e.broadcast_div(&e.sum_keepdim(1)?)?)
}

