//! Event streams and their network-facing representations.

mod stream;
mod voxel;

pub use stream::{decode_events, encode_events, read_events, write_events, Event, EventStream, Polarity};
pub use voxel::{voxelize, voxelize_window, EventVoxelGrid, DEFAULT_TEMPORAL_BINS};
