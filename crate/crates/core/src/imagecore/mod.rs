//! Raster substrate shared by every degradation operator.

mod codec;
mod convolve;
mod resample;

pub use codec::{decode_image, encode_jpeg, jpeg_roundtrip, load_image, save_image, SaveFormat};
pub use convolve::{convolve2d, convolve_separable, reflect101};
pub use resample::{catmull_rom_weights, resize_bicubic};

use crate::error::{Error, Result};

/// Number of interleaved samples per pixel.
pub const CHANNELS: usize = 3;

/// 8-bit RGB raster, row-major and interleaved.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width * height * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::shape(format!(
                "{width}x{height} RGB buffer needs {expected} samples, got {}",
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    /// Constant-colour image.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.pixels[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Per-sample transform, preserving dimensions.
    pub fn map_samples(&self, mut f: impl FnMut(u8) -> u8) -> ImageBuffer {
        ImageBuffer {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Builds a buffer from real-valued interleaved samples using the
    /// toolkit-wide rounding rule.
    pub(crate) fn from_f64_samples(width: usize, height: usize, samples: &[f64]) -> ImageBuffer {
        debug_assert_eq!(samples.len(), width * height * CHANNELS);
        ImageBuffer {
            width,
            height,
            pixels: samples.iter().map(|&v| quantize(v)).collect(),
        }
    }

    pub(crate) fn to_f64_samples(&self) -> Vec<f64> {
        self.pixels.iter().map(|&s| f64::from(s)).collect()
    }
}

/// Round half away from zero, then clamp to the 8-bit range.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

/// Peak signal-to-noise ratio in dB; infinite for identical images.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::shape(format!(
            "psnr needs equal dimensions, got {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let sse: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum();
    let mse = sse / a.pixels.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Dense 2-D filter kernel with odd dimensions, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::shape(format!(
                "{width}x{height} kernel needs {} weights, got {}",
                width * height,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Kernel2D {
            width,
            height,
            weights,
        })
    }

    pub fn identity() -> Self {
        Kernel2D {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    /// Uniform averaging kernel.
    pub fn box_filter(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![1.0 / n as f64; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Blur kernels must sum to one.
    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_length_is_checked() {
        assert!(matches!(
            ImageBuffer::new(2, 2, vec![0; 11]),
            Err(Error::Shape(_))
        ));
        assert!(ImageBuffer::new(0, 2, vec![]).is_err());
        assert!(ImageBuffer::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(quantize(2.5), 3);
        assert_eq!(quantize(2.4999), 2);
        assert_eq!(quantize(-0.4), 0);
        assert_eq!(quantize(-7.0), 0);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(254.5), 255);
    }

    #[test]
    fn even_kernels_are_rejected() {
        assert!(matches!(
            Kernel2D::new(2, 1, vec![0.5, 0.5]),
            Err(Error::InvalidParam(_))
        ));
        assert!(Kernel2D::box_filter(3, 3).unwrap().is_normalized());
    }

    #[test]
    fn psnr_of_identical_images_is_infinite() {
        let a = ImageBuffer::filled(4, 4, [1, 2, 3]).unwrap();
        assert!(psnr(&a, &a).unwrap().is_infinite());
        let b = a.map_samples(|s| s + 1);
        let p = psnr(&a, &b).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-9);
    }
}
