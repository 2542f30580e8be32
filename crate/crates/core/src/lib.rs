//! Event-guided reconstruction of sharp HDR image sequences from a single
//! blurry LDR frame, trained without sharp HDR ground truth.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`datagen`]: event simulation, blur synthesis, exposure decomposition and
//!   corpus files.
//! * [`events`]: event streams, time splitting and voxel grids.
//! * [`model`]: the main reconstruction network and the decomposition /
//!   composition assistance networks.
//! * [`losses`]: the four cycle consistencies and the reference fusion.
//! * [`train`]: two-stage training, checkpoints and sequence inference.
//! * [`metrics`]: μ-law tone mapping and image quality metrics.

pub mod config;
pub mod datagen;
mod error;
pub mod events;
pub mod image;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod train;

pub use candle_core::{DType, Device};
pub use error::{Error, Result};
pub use image::{HdrImage, Image, LdrImage};
