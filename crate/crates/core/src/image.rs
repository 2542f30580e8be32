//! Planar floating-point images.
//!
//! Pixels are stored channel-major (`C x H x W`), which is the layout the
//! networks consume. LDR images hold values in `[0, 1]`; HDR images hold
//! non-negative linear radiance with no upper bound.

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};

/// Rec.601 luma weights applied to linear RGB.
pub const REC601: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

/// Linear-radiance image, non-negative and unbounded above.
pub type HdrImage = Image;
/// Display-referred image with values in `[0, 1]`.
pub type LdrImage = Image;

impl Image {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(
                (channels, height, width),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rec.601 luminance of a three-channel image; single-channel images are
    /// returned unchanged.
    pub fn luminance(&self) -> Result<Image> {
        match self.channels {
            1 => Ok(self.clone()),
            3 => {
                let n = self.height * self.width;
                let data = (0..n)
                    .map(|i| {
                        (REC601[0] * self.data[i] as f64
                            + REC601[1] * self.data[n + i] as f64
                            + REC601[2] * self.data[2 * n + i] as f64) as f32
                    })
                    .collect();
                Image::from_vec(1, self.height, self.width, data)
            }
            c => Err(Error::invalid(format!(
                "luminance needs 1 or 3 channels, got {c}"
            ))),
        }
    }

    /// Crops the window `[y0, y0 + h) x [x0, x0 + w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Image> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::invalid(format!(
                "crop {h}x{w}+{y0}+{x0} exceeds {}x{}",
                self.height, self.width
            )));
        }
        Ok(Image::from_fn(self.channels, h, w, |c, y, x| {
            self.get(c, y0 + y, x0 + x)
        }))
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.shape() == other.shape()
    }

    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.shape(), other.shape()))
        }
    }

    /// `(C, H, W)` tensor of the given dtype.
    pub fn to_tensor(&self, dtype: DType, device: &Device) -> Result<Tensor> {
        let t = Tensor::from_slice(&self.data, (self.channels, self.height, self.width), device)?;
        Ok(t.to_dtype(dtype)?)
    }

    /// Builds an image from a `(C, H, W)` or `(1, C, H, W)` tensor.
    pub fn from_tensor(t: &Tensor) -> Result<Image> {
        let t = match t.rank() {
            4 if t.dim(0)? == 1 => t.squeeze(0)?,
            3 => t.clone(),
            _ => return Err(Error::shape("(C, H, W)", t.dims())),
        };
        let (c, h, w) = t.dims3()?;
        let data = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
        Image::from_vec(c, h, w, data)
    }
}

/// Stacks images of identical shape into a `(B, C, H, W)` tensor.
pub fn batch_tensor(images: &[&Image], dtype: DType, device: &Device) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::invalid("cannot batch zero images"))?;
    let mut data = Vec::with_capacity(images.len() * first.data.len());
    for img in images {
        first.ensure_same_shape(img)?;
        data.extend_from_slice(&img.data);
    }
    let (c, h, w) = first.shape();
    Ok(Tensor::from_vec(data, (images.len(), c, h, w), device)?.to_dtype(dtype)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luminance_of_gray_is_gray() {
        let img = Image::filled(3, 2, 2, 0.25);
        let lum = img.luminance().unwrap();
        for &v in lum.data() {
            assert!((v - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn tensor_round_trip() {
        let img = Image::from_fn(3, 4, 5, |c, y, x| (c * 100 + y * 10 + x) as f32);
        let t = img.to_tensor(DType::F64, &Device::Cpu).unwrap();
        assert_eq!(Image::from_tensor(&t).unwrap(), img);
    }

    #[test]
    fn crop_bounds() {
        let img = Image::zeros(1, 4, 4);
        assert!(img.crop(2, 2, 2, 2).is_ok());
        assert!(img.crop(3, 0, 2, 2).is_err());
    }
}
