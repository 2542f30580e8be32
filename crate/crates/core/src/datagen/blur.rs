use super::exposure::{decompose_exposure, Crf, ExposureTag};
use crate::error::{Error, Result};
use crate::image::{HdrImage, Image, LdrImage};

/// Number of consecutive sharp frames averaged into one blurry frame.
pub const BLUR_WINDOW: usize = 13;

/// Pixel-wise mean of exactly [`BLUR_WINDOW`] linear frames.
pub fn blur_linear_mean(frames: &[HdrImage]) -> Result<HdrImage> {
    if frames.len() != BLUR_WINDOW {
        return Err(Error::invalid(format!(
            "blur window needs {BLUR_WINDOW} frames, got {}",
            frames.len()
        )));
    }
    let first = &frames[0];
    let mut acc = vec![0f64; first.data().len()];
    for (i, f) in frames.iter().enumerate() {
        first.ensure_same_shape(f)?;
        for (a, &v) in acc.iter_mut().zip(f.data()) {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "frame {i} of the blur window has negative or non-finite radiance"
                )));
            }
            *a += v as f64;
        }
    }
    let (c, h, w) = first.shape();
    let n = BLUR_WINDOW as f64;
    Image::from_vec(c, h, w, acc.into_iter().map(|a| (a / n) as f32).collect())
}

/// Averages the window in linear radiance and renders it at EV+0.
pub fn synthesize_blur(frames: &[HdrImage], crf: Crf) -> Result<LdrImage> {
    let mean = blur_linear_mean(frames)?;
    decompose_exposure(&mean, ExposureTag::Plus0, crf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_frames_are_fixed_points() {
        let frames = vec![Image::filled(3, 2, 2, 0.1); BLUR_WINDOW];
        let mean = blur_linear_mean(&frames).unwrap();
        assert!(mean.data().iter().all(|&v| (v - 0.1).abs() < 1e-7));
    }

    #[test]
    fn ramp_averages_to_half() {
        let frames: Vec<_> = (0..13).map(|k| Image::filled(3, 1, 1, k as f32 / 12.0)).collect();
        let mean = blur_linear_mean(&frames).unwrap();
        assert!((mean.get(0, 0, 0) - 0.5).abs() < 1e-7);
        // EV+0 rendering clips 4 * 0.5.
        let ldr = synthesize_blur(&frames, Crf::Linear).unwrap();
        assert_eq!(ldr.get(0, 0, 0), 1.0);
    }

    #[test]
    fn rejects_bad_windows() {
        let frames = vec![Image::filled(3, 1, 1, 0.1); 12];
        assert!(blur_linear_mean(&frames).is_err());
        let mut frames = vec![Image::filled(3, 1, 1, 0.1); 13];
        frames[4] = Image::filled(3, 1, 1, -0.5);
        assert!(blur_linear_mean(&frames).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(values in prop::collection::vec(0.0f32..4.0, 13), rot in 0usize..13) {
            let frames: Vec<_> = values.iter().map(|&v| Image::filled(1, 1, 1, v)).collect();
            let mut shuffled = frames.clone();
            shuffled.rotate_left(rot);
            shuffled.reverse();
            let a = blur_linear_mean(&frames).unwrap();
            let b = blur_linear_mean(&shuffled).unwrap();
            prop_assert!((a.get(0, 0, 0) - b.get(0, 0, 0)).abs() < 1e-6);
        }
    }
}
