use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::HdrImage;

/// Motion content of a capture. Static scenes only move through camera
/// ego-motion; dynamic scenes contain independently moving objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Static,
    #[default]
    Dynamic,
}

/// Sharp linear-radiance frames sampled at uniformly spaced timestamps.
#[derive(Debug, Clone)]
pub struct SharpSequence {
    frames: Vec<HdrImage>,
    timestamps: Vec<f64>,
    scene: SceneKind,
}

const SPACING_TOLERANCE: f64 = 1e-6;

impl SharpSequence {
    pub fn new(frames: Vec<HdrImage>, timestamps: Vec<f64>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("sequence has no frames"));
        }
        if frames.len() != timestamps.len() {
            return Err(Error::invalid(format!(
                "{} frames but {} timestamps",
                frames.len(),
                timestamps.len()
            )));
        }
        let first = &frames[0];
        if first.channels() != 3 {
            return Err(Error::invalid("sequence frames must be RGB"));
        }
        for (i, f) in frames.iter().enumerate() {
            first.ensure_same_shape(f)?;
            if f.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!(
                    "frame {i} has negative or non-finite radiance"
                )));
            }
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("timestamps must be strictly increasing"));
        }
        if timestamps.len() > 2 {
            let dt = timestamps[1] - timestamps[0];
            for w in timestamps.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > SPACING_TOLERANCE * dt.max(1.0) {
                    return Err(Error::invalid("timestamps must be uniformly spaced"));
                }
            }
        }
        Ok(Self {
            frames,
            timestamps,
            scene: SceneKind::default(),
        })
    }

    /// Frames at `framerate` Hz starting from `t0`.
    pub fn at_framerate(frames: Vec<HdrImage>, framerate: f64, t0: f64) -> Result<Self> {
        if !(framerate > 0.0) {
            return Err(Error::config("framerate must be positive"));
        }
        let timestamps = (0..frames.len()).map(|i| t0 + i as f64 / framerate).collect();
        Self::new(frames, timestamps)
    }

    pub fn with_scene(mut self, scene: SceneKind) -> Self {
        self.scene = scene;
        self
    }

    pub fn scene(&self) -> SceneKind {
        self.scene
    }

    pub fn frames(&self) -> &[HdrImage] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width)`.
    pub fn resolution(&self) -> (usize, usize) {
        (self.frames[0].height(), self.frames[0].width())
    }

    /// Frames `[start, start + len)` as a new sequence.
    pub fn window(&self, start: usize, len: usize) -> Result<SharpSequence> {
        if len == 0 || start + len > self.len() {
            return Err(Error::invalid(format!(
                "window [{start}, {}) exceeds {} frames",
                start + len,
                self.len()
            )));
        }
        Ok(SharpSequence {
            frames: self.frames[start..start + len].to_vec(),
            timestamps: self.timestamps[start..start + len].to_vec(),
            scene: self.scene,
        })
    }

    /// Same frames played backwards on the same time axis.
    pub fn reversed(&self) -> SharpSequence {
        let mut frames = self.frames.clone();
        frames.reverse();
        SharpSequence {
            frames,
            timestamps: self.timestamps.clone(),
            scene: self.scene,
        }
    }
}
