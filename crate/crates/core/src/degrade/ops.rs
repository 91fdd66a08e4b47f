use std::f64::consts::PI;

use rand::RngExt;

use super::{RecaptureParams, Seed, GRID_DISABLED};
use crate::error::{Error, Result};
use crate::imagecore::{
    convolve2d, convolve_separable, jpeg_roundtrip, resize_bicubic, ImageBuffer, Kernel2D, CHANNELS,
};

/// Applies `qualities.len()` JPEG generations in order.
pub fn multi_gen_jpeg(img: &ImageBuffer, cycles: u32, qualities: &[u8]) -> Result<ImageBuffer> {
    if qualities.len() != cycles as usize {
        return Err(Error::invalid(format!(
            "{cycles} cycles need {cycles} qualities, got {}",
            qualities.len()
        )));
    }
    let mut out = img.clone();
    for &q in qualities {
        out = jpeg_roundtrip(&out, q)?;
    }
    Ok(out)
}

/// Bicubic downscale to `ceil(w/f) x ceil(h/f)` and back.
pub fn down_up_scale(img: &ImageBuffer, factor: u32) -> Result<ImageBuffer> {
    let f = factor as usize;
    if f == 0 {
        return Err(Error::invalid("scale factor must be >= 1"));
    }
    let (w, h) = img.dims();
    if w < f || h < f {
        return Err(Error::invalid(format!(
            "{w}x{h} image is smaller than scale factor {factor}"
        )));
    }
    let small = resize_bicubic(img, w.div_ceil(f), h.div_ceil(f))?;
    resize_bicubic(&small, w, h)
}

/// Normalised 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel_1d(sigma: f64) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Separable Gaussian blur, reflect-101 borders.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    let k = gaussian_kernel_1d(sigma)?;
    convolve_separable(img, &k, &k)
}

fn odd_ceil(v: f64) -> usize {
    let n = (v.ceil() as usize).max(1);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Line kernel: `length` taps of weight `1/length` rasterised through the
/// centre along `angle_deg` (counter-clockwise, image y pointing down).
pub fn motion_kernel(length: u32, angle_deg: f64) -> Result<Kernel2D> {
    if length == 0 {
        return Err(Error::invalid("motion blur length must be >= 1"));
    }
    if !(0.0..180.0).contains(&angle_deg) {
        return Err(Error::invalid(format!(
            "motion blur angle must be in [0, 180), got {angle_deg}"
        )));
    }
    let l = f64::from(length);
    let theta = angle_deg.to_radians();
    let (cos, sin) = (theta.cos(), theta.sin());
    let kw = odd_ceil(l * cos.abs());
    let kh = odd_ceil(l * sin.abs());
    let (cx, cy) = ((kw / 2) as isize, (kh / 2) as isize);
    let mut weights = vec![0.0; kw * kh];
    let tap = 1.0 / l;
    for i in 0..length {
        let t = f64::from(i) - (l - 1.0) / 2.0;
        let dx = (t * cos + 0.5).floor() as isize;
        let dy = (-t * sin + 0.5).floor() as isize;
        let x = (cx + dx).clamp(0, kw as isize - 1) as usize;
        let y = (cy + dy).clamp(0, kh as isize - 1) as usize;
        debug_assert_eq!((x as isize - cx, y as isize - cy), (dx, dy));
        weights[y * kw + x] += tap;
    }
    Kernel2D::new(kw, kh, weights)
}

pub fn motion_blur(img: &ImageBuffer, length: u32, angle_deg: f64) -> Result<ImageBuffer> {
    let k = motion_kernel(length, angle_deg)?;
    convolve2d(img, &k)
}

/// Whole-pixel impulse noise: each pixel independently becomes pure black
/// or pure white (equal odds) with probability `p`.
pub fn salt_pepper(img: &ImageBuffer, p: f64, seed: Seed) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "probability must be in [0, 1], got {p}"
        )));
    }
    let mut rng = seed.rng();
    let mut out = img.clone();
    let (w, h) = img.dims();
    for y in 0..h {
        for x in 0..w {
            if rng.random::<f64>() < p {
                let v = if rng.random::<bool>() { 255 } else { 0 };
                out.set_pixel(x, y, [v; 3]);
            }
        }
    }
    Ok(out)
}

/// Per-channel additive offset with clamping.
pub fn channel_clip(img: &ImageBuffer, deltas: [i32; 3]) -> ImageBuffer {
    let mut out = img.clone().into_pixels();
    for px in out.chunks_exact_mut(CHANNELS) {
        for (s, d) in px.iter_mut().zip(deltas) {
            *s = (i32::from(*s) + d).clamp(0, 255) as u8;
        }
    }
    let (w, h) = img.dims();
    ImageBuffer::new(w, h, out).expect("dimensions unchanged")
}

/// Screen recapture: display grid, moiré, a reflection highlight peaking in
/// a seeded corner, then recompression. Values are clamped after each stage.
pub fn screen_recapture(
    img: &ImageBuffer,
    params: &RecaptureParams,
    seed: Seed,
) -> Result<ImageBuffer> {
    params.validate()?;
    let (w, h) = img.dims();
    let mut buf = img.to_f64_samples();
    let clamp_all = |buf: &mut [f64]| buf.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));

    if params.grid_period != GRID_DISABLED {
        let period = params.grid_period as usize;
        for y in 0..h {
            for x in 0..w {
                if y % period == 0 || x % period == 0 {
                    let i = (y * w + x) * CHANNELS;
                    buf[i..i + CHANNELS].iter_mut().for_each(|v| *v *= 0.85);
                }
            }
        }
        clamp_all(&mut buf);
    }

    if params.moire_amp != 0.0 {
        for y in 0..h {
            for x in 0..w {
                let delta =
                    params.moire_amp * (2.0 * PI * params.moire_freq * (x + y) as f64).sin();
                let i = (y * w + x) * CHANNELS;
                buf[i..i + CHANNELS].iter_mut().for_each(|v| *v += delta);
            }
        }
        clamp_all(&mut buf);
    }

    if params.reflect_strength > 0.0 {
        let corner = seed.rng().random_range(0..4u8);
        let peak = params.reflect_strength * 60.0;
        let span = |n: usize| if n > 1 { (n - 1) as f64 } else { 1.0 };
        for y in 0..h {
            for x in 0..w {
                let dx = if corner & 1 == 0 { x } else { w - 1 - x } as f64 / span(w);
                let dy = if corner & 2 == 0 { y } else { h - 1 - y } as f64 / span(h);
                let delta = peak * (1.0 - (dx + dy) / 2.0);
                let i = (y * w + x) * CHANNELS;
                buf[i..i + CHANNELS].iter_mut().for_each(|v| *v += delta);
            }
        }
        clamp_all(&mut buf);
    }

    let staged = ImageBuffer::from_f64_samples(w, h, &buf);
    jpeg_roundtrip(&staged, params.recapture_quality)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, |x, y| {
            [
                ((x * 37 + y * 11) % 256) as u8,
                ((x * x + 3 * y) % 256) as u8,
                ((x * y + 90) % 256) as u8,
            ]
        })
        .unwrap()
    }

    #[test]
    fn gaussian_kernel_shape() {
        let k = gaussian_kernel_1d(2.5).unwrap();
        assert_eq!(k.len(), 2 * 8 + 1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gaussian_kernel_1d(0.0).is_err());
        assert!(gaussian_kernel_1d(-1.0).is_err());
    }

    #[test]
    fn motion_kernel_dimensions() {
        let k = motion_kernel(8, 0.0).unwrap();
        assert_eq!((k.width(), k.height()), (9, 1));
        let k = motion_kernel(20, 45.0).unwrap();
        assert_eq!((k.width(), k.height()), (15, 15));
        let k = motion_kernel(12, 90.0).unwrap();
        assert_eq!((k.width(), k.height()), (1, 13));
        for (l, a) in [(8, 17.0), (12, 133.3), (16, 90.0), (20, 179.9), (1, 60.0)] {
            let k = motion_kernel(l, a).unwrap();
            assert!(k.is_normalized(), "L={l} angle={a}");
            assert_eq!(k.width() % 2, 1);
            assert_eq!(k.height() % 2, 1);
        }
        assert!(motion_kernel(0, 0.0).is_err());
        assert!(motion_kernel(8, 180.0).is_err());
    }

    #[test]
    fn horizontal_motion_smears_eight_pixels() {
        let mut img = ImageBuffer::filled(21, 3, [0; 3]).unwrap();
        img.set_pixel(10, 1, [255; 3]);
        let out = motion_blur(&img, 8, 0.0).unwrap();
        let row: Vec<u8> = (0..21).map(|x| out.pixel(x, 1)[0]).collect();
        let lit: Vec<usize> = (0..21).filter(|&x| row[x] > 0).collect();
        assert_eq!(lit.len(), 8);
        assert!(lit.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(lit.iter().all(|&x| (i32::from(row[x]) - 32).abs() <= 1));
    }

    #[test]
    fn down_up_rejects_tiny_images() {
        let img = textured(5, 9);
        assert!(matches!(
            down_up_scale(&img, 6),
            Err(Error::InvalidParam(_))
        ));
        assert!(down_up_scale(&img, 0).is_err());
        // 7x7 at factor 6 rounds the intermediate up to 2x2.
        let img = textured(7, 7);
        assert_eq!(down_up_scale(&img, 6).unwrap().dims(), (7, 7));
    }

    #[test]
    fn channel_clip_hand_arithmetic() {
        let img = ImageBuffer::filled(1, 1, [250, 10, 128]).unwrap();
        assert_eq!(channel_clip(&img, [15, -15, 35]).pixel(0, 0), [255, 0, 163]);
    }

    #[test]
    fn salt_pepper_rejects_bad_probability() {
        let img = textured(4, 4);
        assert!(salt_pepper(&img, -0.1, Seed(1)).is_err());
        assert!(salt_pepper(&img, 1.5, Seed(1)).is_err());
    }

    #[test]
    fn recapture_grid_darkens_row_zero() {
        let img = ImageBuffer::filled(30, 30, [160; 3]).unwrap();
        let p = RecaptureParams {
            moire_amp: 0.0,
            reflect_strength: 0.0,
            recapture_quality: 100,
            ..RecaptureParams::default()
        };
        let out = screen_recapture(&img, &p, Seed(3)).unwrap();
        // Row 0 is fully darkened; row 1 only on grid columns.
        assert!(out.pixel(1, 0)[0] < out.pixel(1, 1)[0]);
        assert!(screen_recapture(
            &img,
            &RecaptureParams {
                grid_period: 1,
                ..p
            },
            Seed(3)
        )
        .is_err());
        assert!(screen_recapture(
            &img,
            &RecaptureParams {
                reflect_strength: 1.5,
                ..p
            },
            Seed(3)
        )
        .is_err());
    }

    #[test]
    fn reflection_peaks_in_a_corner() {
        let img = ImageBuffer::filled(40, 40, [100; 3]).unwrap();
        let p = RecaptureParams {
            grid_period: GRID_DISABLED,
            moire_amp: 0.0,
            reflect_strength: 1.0,
            recapture_quality: 100,
            ..RecaptureParams::default()
        };
        let out = screen_recapture(&img, &p, Seed(11)).unwrap();
        let corners = [
            out.pixel(0, 0),
            out.pixel(39, 0),
            out.pixel(0, 39),
            out.pixel(39, 39),
        ];
        let brightest = corners.iter().map(|c| c[0]).max().unwrap();
        let darkest = corners.iter().map(|c| c[0]).min().unwrap();
        assert!(
            i32::from(brightest) >= 155 && i32::from(brightest) <= 162,
            "{brightest}"
        );
        assert!(i32::from(darkest) <= 102, "{darkest}");
    }
}
