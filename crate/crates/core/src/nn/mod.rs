//! Minimal neural-network plumbing on top of candle tensors: named
//! parameter stores with seeded initialization, convolution layers,
//! modulated deformable convolution and an Adam optimizer whose state can
//! be checkpointed.

mod deform;
mod layers;
mod optim;
mod params;

pub use deform::DeformConv2d;
pub use layers::{leaky_relu, softplus, upsample_nearest, Conv2d, ResBlock};
pub use optim::{Adam, AdamConfig};
pub use params::{Init, ParamStore};
