use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use super::ImageBuffer;
use crate::error::{Error, Result};

/// On-disk encoding for [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveFormat {
    Png,
    Jpeg { quality: u8 },
}

fn check_quality(quality: u8) -> Result<()> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!(
            "jpeg quality must be in [1, 100], got {quality}"
        )));
    }
    Ok(())
}

/// Reads a PNG or JPEG file as RGB. Grey sources are replicated into all
/// three channels and alpha is discarded.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Codec(message) => Error::Decode {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Decodes PNG or JPEG bytes.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let format = image::guess_format(bytes).map_err(|e| Error::Codec(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::Codec(format!("unsupported format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Codec(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ImageBuffer::new(w, h, rgb.into_raw())
}

pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>, format: SaveFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        SaveFormat::Png => encode_png(img)?,
        SaveFormat::Jpeg { quality } => encode_jpeg(img, quality)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(
            img.pixels(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// Baseline sequential JFIF with the standard quantisation tables scaled by
/// `quality`.
pub fn encode_jpeg(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    check_quality(quality)?;
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality)
        .encode(
            img.pixels(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// `decode(encode(img, quality))`, one compression generation.
pub fn jpeg_roundtrip(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    let bytes = encode_jpeg(img, quality)?;
    let decoded = decode_image(&bytes)?;
    debug_assert_eq!(decoded.dims(), img.dims());
    Ok(decoded)
}
