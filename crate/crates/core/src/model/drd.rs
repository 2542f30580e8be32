use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_input, ModelConfig};
use crate::datagen::ExposureStack;
use crate::error::Result;
use crate::image::{HdrImage, LdrImage};
use crate::nn::{leaky_relu, Conv2d, Init, ParamStore, ResBlock};

/// Dynamic range decomposition: HDR frame → LDR stack at EV-2, EV+0, EV+2.
#[derive(Debug)]
pub struct Drd {
    params: ParamStore,
    head: Conv2d,
    blocks: Vec<ResBlock>,
    outputs: [Conv2d; 3],
}

impl Drd {
    pub fn new(cfg: &ModelConfig, dtype: DType, device: &Device, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.base_channels;
        let mut params = ParamStore::new(dtype, device);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init::new(&mut params, &mut rng);
        let head = Conv2d::new(&mut init.pp("head"), 3, c, 3, 1, 1.0)?;
        let blocks = (0..cfg.drd_blocks)
            .map(|i| ResBlock::new(&mut init.pp(&format!("res{i}")), c, 3))
            .collect::<Result<Vec<_>>>()?;
        let outputs = [
            Conv2d::new(&mut init.pp("out_m2"), c, 3, 3, 1, 1.0)?,
            Conv2d::new(&mut init.pp("out_p0"), c, 3, 3, 1, 1.0)?,
            Conv2d::new(&mut init.pp("out_p2"), c, 3, 3, 1, 1.0)?,
        ];
        Ok(Self {
            params,
            head,
            blocks,
            outputs,
        })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `(Ŝ_-2, Ŝ_+0, Ŝ_+2)`, each `(B, 3, H, W)` in `(0, 1)`.
    pub fn forward(&self, hdr: &Tensor) -> Result<[Tensor; 3]> {
        check_input(hdr, 3, "HDR frame")?;
        let mut x = leaky_relu(&self.head.forward(hdr)?)?;
        for block in &self.blocks {
            x = block.forward(&x)?;
        }
        let head = |i: usize| -> Result<Tensor> {
            Ok(candle_nn::ops::sigmoid(&self.outputs[i].forward(&x)?)?)
        };
        Ok([head(0)?, head(1)?, head(2)?])
    }

    pub fn decompose(&self, hdr: &HdrImage) -> Result<ExposureStack> {
        let x = hdr.to_tensor(self.params.dtype(), self.params.device())?.unsqueeze(0)?;
        let [a, b, c] = self.forward(&x)?;
        ExposureStack::new(
            LdrImage::from_tensor(&a)?,
            LdrImage::from_tensor(&b)?,
            LdrImage::from_tensor(&c)?,
        )
    }
}
