//! μ-law tone mapping and image-quality metrics that need no external
//! models: PSNR-μ, SSIM-μ, average gradient and spatial frequency.

mod gradient;
mod report;
mod ssim;
mod tonemap;

pub use gradient::{average_gradient, spatial_frequency};
pub use report::{write_report, EvalRow, EvalSummary};
pub use ssim::{ssim, SSIM_WINDOW};
pub use tonemap::{mu_law, mu_tonemap, PeakNormalization, ToneMapConfig};

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

/// `-10 log10(mse)` for unit peak, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (-10.0 * mse.log10()).min(PSNR_CAP_DB)
}

/// PSNR of two images with peak value 1.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    if a.data().is_empty() {
        return Err(Error::invalid("PSNR of empty images"));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(psnr_from_mse(mse))
}

/// PSNR between μ-law tone-mapped prediction and reference.
pub fn psnr_mu(pred: &Image, reference: &Image, cfg: &ToneMapConfig) -> Result<f64> {
    pred.ensure_same_shape(reference)?;
    psnr(&mu_tonemap(pred, cfg)?, &mu_tonemap(reference, cfg)?)
}

/// SSIM between the luminance of the μ-law tone-mapped images.
pub fn ssim_mu(pred: &Image, reference: &Image, cfg: &ToneMapConfig) -> Result<f64> {
    pred.ensure_same_shape(reference)?;
    let a = mu_tonemap(pred, cfg)?.luminance()?;
    let b = mu_tonemap(reference, cfg)?.luminance()?;
    ssim(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn psnr_cases() {
        let cfg = ToneMapConfig::default();
        let a = Image::from_fn(3, 8, 8, |c, y, x| 0.01 + (c + y * x) as f32 * 0.01);
        assert_eq!(psnr_mu(&a, &a, &cfg).unwrap(), PSNR_CAP_DB);
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
        let zeros = Image::zeros(3, 4, 4);
        let ones = Image::filled(3, 4, 4, 1.0);
        assert!(psnr_mu(&zeros, &ones, &cfg).unwrap().abs() < 1e-12);
        assert!(psnr_mu(&zeros, &Image::zeros(3, 4, 5), &cfg).is_err());
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let cfg = ToneMapConfig::default();
        let reference = Image::from_fn(3, 32, 32, |c, y, x| 0.05 + 0.9 * ((c * 7 + y * 3 + x) % 17) as f32 / 17.0);
        let mut last = PSNR_CAP_DB;
        for sigma in [0.01f32, 0.05, 0.1] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let noise = Normal::new(0.0f32, sigma).unwrap();
            let mut noisy = reference.clone();
            for v in noisy.data_mut() {
                *v = (*v + noise.sample(&mut rng)).max(0.0);
            }
            // Fixed peak so the comparison isolates the noise level.
            let fixed = ToneMapConfig {
                normalization: PeakNormalization::Fixed1,
                ..cfg
            };
            let p = psnr_mu(&noisy, &reference, &fixed).unwrap();
            assert!(p < last, "sigma {sigma}: {p} !< {last}");
            last = p;
        }
    }
}
