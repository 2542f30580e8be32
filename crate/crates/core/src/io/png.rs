use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::image::Image;

/// Writes an 8-bit PNG. Values are clamped to `[0, 1]` and rounded.
pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    let (c, h, w) = img.shape();
    let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match c {
        1 => {
            let buf: GrayImage =
                ImageBuffer::from_fn(w as u32, h as u32, |x, y| Luma([q(img.get(0, y as usize, x as usize))]));
            buf.save(path)?;
        }
        3 => {
            let buf: RgbImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                let (x, y) = (x as usize, y as usize);
                Rgb([q(img.get(0, y, x)), q(img.get(1, y, x)), q(img.get(2, y, x))])
            });
            buf.save(path)?;
        }
        c => return Err(Error::invalid(format!("PNG output supports 1 or 3 channels, got {c}"))),
    }
    Ok(())
}

/// Reads a PNG as a three-channel image in `[0, 1]`.
pub fn read_png(path: &Path) -> Result<Image> {
    let dynamic = image::open(path)?;
    if dynamic.color().has_color() {
        let rgb = dynamic.to_rgb32f();
        let (w, h) = rgb.dimensions();
        Ok(Image::from_fn(3, h as usize, w as usize, |c, y, x| {
            rgb.get_pixel(x as u32, y as u32)[c]
        }))
    } else {
        let gray = dynamic.to_luma32f();
        let (w, h) = gray.dimensions();
        Ok(Image::from_fn(3, h as usize, w as usize, |_, y, x| {
            gray.get_pixel(x as u32, y as u32)[0]
        }))
    }
}
