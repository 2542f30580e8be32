use serde::{Deserialize, Serialize};

use super::sequence::SharpSequence;
use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};
use crate::image::REC601;

/// Contrast-threshold event generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    /// Log-intensity change that triggers one event.
    pub contrast_threshold: f64,
    /// Floor applied to luminance before taking the logarithm.
    pub log_eps: f64,
    /// Frame rate of the sharp source sequences, in Hz.
    pub framerate: f64,
    /// Minimum spacing between events at one pixel, in seconds.
    pub refractory: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            contrast_threshold: 0.2,
            log_eps: 1e-3,
            framerate: 150.0,
            refractory: 0.0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_threshold > 0.0) {
            return Err(Error::config("contrast threshold must be positive"));
        }
        if !(self.log_eps > 0.0) {
            return Err(Error::config("log_eps must be positive"));
        }
        if !(self.framerate > 0.0) {
            return Err(Error::config("framerate must be positive"));
        }
        if !(self.refractory >= 0.0) {
            return Err(Error::config("refractory period must be non-negative"));
        }
        Ok(())
    }
}

/// Slack, in log-intensity units, for a level to count as reached. Absorbs
/// the rounding of `f32` frames so that a change of exactly `k * C` yields
/// `k` events.
pub const CROSSING_TOLERANCE: f64 = 1e-6;

/// Simulates an event camera observing `seq`.
///
/// Per pixel, log luminance is interpolated linearly between frames. Every
/// time it moves one contrast threshold away from the pixel's reference
/// level, an event is emitted at the exact interpolated crossing time and the
/// reference moves to the crossed level.
pub fn simulate_events(seq: &SharpSequence, cfg: &SimulatorConfig) -> Result<EventStream> {
    cfg.validate()?;
    if seq.len() < 2 {
        return Err(Error::invalid("event simulation needs at least two frames"));
    }
    let (h, w) = seq.resolution();
    let ts = seq.timestamps();
    let span = (ts[0], ts[ts.len() - 1]);
    let log_frames: Vec<Vec<f64>> = seq
        .frames()
        .iter()
        .map(|f| {
            let n = h * w;
            let d = f.data();
            (0..n)
                .map(|i| {
                    let lum = REC601[0] * d[i] as f64
                        + REC601[1] * d[n + i] as f64
                        + REC601[2] * d[2 * n + i] as f64;
                    lum.max(cfg.log_eps).ln()
                })
                .collect()
        })
        .collect();

    let c = cfg.contrast_threshold;
    let mut events = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut reference = log_frames[0][i];
            let mut last_t = f64::NEG_INFINITY;
            for k in 0..ts.len() - 1 {
                let (a, b) = (log_frames[k][i], log_frames[k + 1][i]);
                let (ta, tb) = (ts[k], ts[k + 1]);
                let delta = b - a;
                if delta == 0.0 {
                    continue;
                }
                let (step, polarity) = if delta > 0.0 {
                    (c, Polarity::Positive)
                } else {
                    (-c, Polarity::Negative)
                };
                loop {
                    let level = reference + step;
                    let reached = if step > 0.0 {
                        b >= level - CROSSING_TOLERANCE
                    } else {
                        b <= level + CROSSING_TOLERANCE
                    };
                    if !reached {
                        break;
                    }
                    let frac = ((level - a) / delta).clamp(0.0, 1.0);
                    let t = ta + frac * (tb - ta);
                    if t - last_t >= cfg.refractory {
                        events.push(Event {
                            x: x as u16,
                            y: y as u16,
                            t,
                            p: polarity,
                        });
                        last_t = t;
                    }
                    reference = level;
                }
            }
        }
    }
    events.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    EventStream::new(events, h, w, span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;

    /// Two-frame single-pixel sequence whose log luminance goes from `a` to `b`.
    fn ramp(a: f64, b: f64, dt: f64) -> SharpSequence {
        let f = |l: f64| Image::filled(3, 1, 1, l.exp() as f32);
        SharpSequence::new(vec![f(a), f(b)], vec![0.0, dt]).unwrap()
    }

    #[test]
    fn constant_pixel_is_silent() {
        let seq = SharpSequence::new(vec![Image::filled(3, 2, 2, 0.3); 5], (0..5).map(|i| i as f64).collect()).unwrap();
        assert!(simulate_events(&seq, &SimulatorConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn rising_ramp_crossing_times() {
        let c = 0.2;
        let dt = 1.0 / 150.0;
        let base = (0.05f64).ln();
        let s = simulate_events(&ramp(base, base + 3.5 * c, dt), &SimulatorConfig::default()).unwrap();
        assert_eq!(s.len(), 3);
        for (k, e) in s.events().iter().enumerate() {
            assert_eq!(e.p, Polarity::Positive);
            let expected = (k + 1) as f64 / 3.5 * dt;
            assert!((e.t - expected).abs() < 1e-9, "{} vs {expected}", e.t);
        }
    }

    #[test]
    fn falling_ramp_of_two_thresholds() {
        let base = (0.5f64).ln();
        let s = simulate_events(&ramp(base, base - 0.4, 0.01), &SimulatorConfig::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.events().iter().all(|e| e.p == Polarity::Negative));
    }

    #[test]
    fn refractory_drops_close_events() {
        let base = (0.05f64).ln();
        let cfg = SimulatorConfig {
            refractory: 1.0,
            ..Default::default()
        };
        let s = simulate_events(&ramp(base, base + 0.9, 1.0), &cfg).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn errors() {
        let one = SharpSequence::new(vec![Image::filled(3, 1, 1, 0.3)], vec![0.0]).unwrap();
        assert!(matches!(
            simulate_events(&one, &SimulatorConfig::default()),
            Err(Error::InvalidInput(_))
        ));
        let cfg = SimulatorConfig {
            contrast_threshold: 0.0,
            ..Default::default()
        };
        assert!(matches!(simulate_events(&ramp(0.0, 1.0, 1.0), &cfg), Err(Error::Config(_))));
    }
}
