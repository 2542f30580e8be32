//! Procedural HDR scenes for toy corpora, benchmarks and tests.
//!
//! Radiance is an analytic function of continuous image coordinates, so
//! sub-pixel motion needs no resampling. Textures combine log-domain sine
//! gratings with bright Gaussian light sources, which gives a dynamic range
//! that saturates the EV+0 rendering while leaving shadows dim at EV-2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sequence::{SceneKind, SharpSequence};
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone)]
pub struct SceneParams {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub framerate: f64,
    pub kind: SceneKind,
    /// Upper bound on motion speed in pixels per frame.
    pub max_speed: f64,
    pub seed: u64,
}

impl SceneParams {
    pub fn new(height: usize, width: usize, frames: usize, kind: SceneKind, seed: u64) -> Self {
        Self {
            height,
            width,
            frames,
            framerate: 150.0,
            kind,
            max_speed: 1.5,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: [f64; 3],
}

#[derive(Debug, Clone)]
struct Light {
    cx: f64,
    cy: f64,
    inv_two_sigma2: f64,
    radiance: [f64; 3],
}

#[derive(Debug, Clone)]
struct Texture {
    base: [f64; 3],
    waves: Vec<Wave>,
    lights: Vec<Light>,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, extent: f64, brightness: f64) -> Self {
        let level = rng.random_range((0.03f64).ln()..(0.12f64).ln()).exp() * brightness;
        let tint = [rng.random_range(0.7..1.3), rng.random_range(0.7..1.3), rng.random_range(0.7..1.3)];
        let waves = (0..3)
            .map(|_| {
                let wavelength = rng.random_range(6.0..24.0);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                let a = rng.random_range(0.3..0.8);
                Wave {
                    kx: k * angle.cos(),
                    ky: k * angle.sin(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    amp: [a * rng.random_range(0.8..1.2), a, a * rng.random_range(0.8..1.2)],
                }
            })
            .collect();
        let n_lights = rng.random_range(1..=2);
        let lights = (0..n_lights)
            .map(|_| {
                let sigma: f64 = rng.random_range(3.0..8.0);
                let peak = rng.random_range(0.8..3.0) * brightness;
                Light {
                    cx: rng.random_range(0.0..extent),
                    cy: rng.random_range(0.0..extent),
                    inv_two_sigma2: 1.0 / (2.0 * sigma * sigma),
                    radiance: [peak * rng.random_range(0.8..1.0), peak, peak * rng.random_range(0.8..1.0)],
                }
            })
            .collect();
        Self {
            base: tint.map(|t| t * level),
            waves,
            lights,
        }
    }

    fn radiance(&self, u: f64, v: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let s: f64 = self
                .waves
                .iter()
                .map(|w| w.amp[c] * (w.kx * u + w.ky * v + w.phase).sin())
                .sum();
            *o = self.base[c] * s.exp();
        }
        for l in &self.lights {
            let d2 = (u - l.cx).powi(2) + (v - l.cy).powi(2);
            let g = (-d2 * l.inv_two_sigma2).exp();
            for (o, r) in out.iter_mut().zip(l.radiance) {
                *o += r * g;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct MovingObject {
    texture: Texture,
    start: (f64, f64),
    velocity: (f64, f64),
    radius: f64,
}

/// Generates a sequence of sharp HDR frames.
///
/// Static scenes pan a textured plane under constant camera velocity.
/// Dynamic scenes add one or two textured discs moving across a slowly
/// panning background.
pub fn generate(params: &SceneParams) -> Result<SharpSequence> {
    if params.height == 0 || params.width == 0 || params.frames == 0 {
        return Err(Error::invalid("scene needs positive size and frame count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let extent = params.height.max(params.width) as f64;
    let background = Texture::random(&mut rng, extent, 1.0);
    let mut direction = || {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (angle.cos(), angle.sin())
    };
    let (dx, dy) = direction();
    let cam_speed = match params.kind {
        SceneKind::Static => rng.random_range(0.5..1.0) * params.max_speed,
        SceneKind::Dynamic => rng.random_range(0.0..0.3) * params.max_speed,
    };
    let camera = (dx * cam_speed, dy * cam_speed);
    let objects: Vec<MovingObject> = match params.kind {
        SceneKind::Static => Vec::new(),
        SceneKind::Dynamic => {
            let n = rng.random_range(1..=2);
            (0..n)
                .map(|_| {
                    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let speed = rng.random_range(0.6..1.0) * params.max_speed * 1.5;
                    let brightness = if rng.random_bool(0.5) { 4.0 } else { 0.3 };
                    MovingObject {
                        texture: Texture::random(&mut rng, extent, brightness),
                        start: (
                            rng.random_range(0.25..0.75) * params.width as f64,
                            rng.random_range(0.25..0.75) * params.height as f64,
                        ),
                        velocity: (angle.cos() * speed, angle.sin() * speed),
                        radius: rng.random_range(0.12..0.25) * extent,
                    }
                })
                .collect()
        }
    };

    let frames = (0..params.frames)
        .map(|k| {
            let k = k as f64;
            Image::from_fn(3, params.height, params.width, |c, y, x| {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let mut value = background.radiance(px + camera.0 * k, py + camera.1 * k)[c];
                for obj in &objects {
                    let ox = obj.start.0 + obj.velocity.0 * k;
                    let oy = obj.start.1 + obj.velocity.1 * k;
                    let r = ((px - ox).powi(2) + (py - oy).powi(2)).sqrt();
                    // one-pixel anti-aliased edge
                    let cover = (obj.radius + 0.5 - r).clamp(0.0, 1.0);
                    if cover > 0.0 {
                        let inner = obj.texture.radiance(px - ox, py - oy)[c];
                        value = value * (1.0 - cover) + inner * cover;
                    }
                }
                value as f32
            })
        })
        .collect();
    Ok(SharpSequence::at_framerate(frames, params.framerate, 0.0)?.with_scene(params.kind))
}

/// `count` independent scenes of one kind, each seeded from `(seed, i)`.
pub fn procedural_sequences(
    count: usize,
    height: usize,
    width: usize,
    frames: usize,
    kind: SceneKind,
    seed: u64,
) -> Result<Vec<SharpSequence>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            generate(&SceneParams::new(height, width, frames, kind, rng.random()))
        })
        .collect()
}
