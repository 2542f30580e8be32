use candle_core::{DType, Device, Tensor};

use super::{EventStream, Polarity};
use crate::error::{Error, Result};

pub const DEFAULT_TEMPORAL_BINS: usize = 6;

/// Polarity-separated temporal histogram of shape `(2m, h, w)`.
///
/// Channels `[0, m)` hold positive events and `[m, 2m)` negative events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventVoxelGrid {
    bins: usize,
    height: usize,
    width: usize,
    span: (f64, f64),
    data: Vec<f64>,
}

impl EventVoxelGrid {
    pub fn zeros(bins: usize, height: usize, width: usize, span: (f64, f64)) -> Self {
        Self {
            bins,
            height,
            width,
            span,
            data: vec![0.0; 2 * bins * height * width],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// `(2m, h, w)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (2 * self.bins, self.height, self.width)
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    /// Total mass deposited by one polarity group.
    pub fn polarity_sum(&self, polarity: Polarity) -> f64 {
        let plane = self.height * self.width;
        let group = self.bins * plane;
        let range = match polarity {
            Polarity::Positive => 0..group,
            Polarity::Negative => group..2 * group,
        };
        self.data[range].iter().sum()
    }

    pub fn to_tensor(&self, dtype: DType, device: &Device) -> Result<Tensor> {
        let t = Tensor::from_slice(&self.data, self.shape(), device)?;
        Ok(t.to_dtype(dtype)?)
    }

    fn deposit(&mut self, channel: usize, y: usize, x: usize, mass: f64) {
        self.data[(channel * self.height + y) * self.width + x] += mass;
    }
}

/// Accumulates events into `m` temporal bins per polarity.
///
/// Each event carries unit mass, split linearly between the two bins nearest
/// to `t* = (m - 1)(t - t0) / (t1 - t0)`.
pub fn voxelize(stream: &EventStream, bins: usize, span: (f64, f64)) -> Result<EventVoxelGrid> {
    let (t0, t1) = span;
    if bins == 0 {
        return Err(Error::config("voxel grid needs at least one temporal bin"));
    }
    if !(t1 > t0) {
        return Err(Error::config(format!("degenerate voxel span [{t0}, {t1}]")));
    }
    let (h, w) = stream.resolution();
    let mut grid = EventVoxelGrid::zeros(bins, h, w, span);
    let scale = (bins - 1) as f64 / (t1 - t0);
    for e in stream.events() {
        if !(e.t >= t0 && e.t <= t1) {
            return Err(Error::invalid(format!(
                "event time {} outside voxel span [{t0}, {t1}]",
                e.t
            )));
        }
        let offset = match e.p {
            Polarity::Positive => 0,
            Polarity::Negative => bins,
        };
        let (x, y) = (e.x as usize, e.y as usize);
        let tn = ((e.t - t0) * scale).clamp(0.0, (bins - 1) as f64);
        let lo = (tn.floor() as usize).min(bins - 1);
        let frac = tn - lo as f64;
        if lo + 1 < bins && frac > 0.0 {
            grid.deposit(offset + lo, y, x, 1.0 - frac);
            grid.deposit(offset + lo + 1, y, x, frac);
        } else {
            grid.deposit(offset + lo, y, x, 1.0);
        }
    }
    Ok(grid)
}

/// Like [`voxelize`], but a zero-length span is accepted: every event in it
/// lands in the first bin of its polarity. Used for the two halves of a
/// stream split exactly at a span end.
pub fn voxelize_window(stream: &EventStream, bins: usize, span: (f64, f64)) -> Result<EventVoxelGrid> {
    let (t0, t1) = span;
    if t1 != t0 {
        return voxelize(stream, bins, span);
    }
    if bins == 0 {
        return Err(Error::config("voxel grid needs at least one temporal bin"));
    }
    let (h, w) = stream.resolution();
    let mut grid = EventVoxelGrid::zeros(bins, h, w, span);
    for e in stream.events() {
        if e.t != t0 {
            return Err(Error::invalid(format!("event time {} outside voxel span [{t0}, {t1}]", e.t)));
        }
        let offset = match e.p {
            Polarity::Positive => 0,
            Polarity::Negative => bins,
        };
        grid.deposit(offset, e.y as usize, e.x as usize, 1.0);
    }
    Ok(grid)
}
