use super::{ImageBuffer, Kernel2D, CHANNELS};
use crate::error::{Error, Result};

/// Reflect-101 border index (`gfedcb|abcdefgh|gfedcba`), valid for any offset.
pub fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Per-channel 2-D convolution with reflect-101 borders. The kernel is
/// flipped, so asymmetric kernels behave as true convolution.
pub fn convolve2d(img: &ImageBuffer, kernel: &Kernel2D) -> Result<ImageBuffer> {
    if kernel.width().is_multiple_of(2) || kernel.height().is_multiple_of(2) {
        return Err(Error::invalid("kernel dimensions must be odd"));
    }
    let (w, h) = img.dims();
    let (kw, kh) = (kernel.width(), kernel.height());
    let (cx, cy) = ((kw / 2) as isize, (kh / 2) as isize);
    let src = img.pixels();

    // Sparse taps: motion-blur kernels are mostly zeros.
    let taps: Vec<(isize, isize, f64)> = (0..kh)
        .flat_map(|j| (0..kw).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let wgt = kernel.weight(i, j);
            (wgt != 0.0).then_some((cx - i as isize, cy - j as isize, wgt))
        })
        .collect();

    let mut out = vec![0.0f64; w * h * CHANNELS];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; CHANNELS];
            for &(dx, dy, wgt) in &taps {
                let sx = reflect101(x as isize + dx, w);
                let sy = reflect101(y as isize + dy, h);
                let base = (sy * w + sx) * CHANNELS;
                for c in 0..CHANNELS {
                    acc[c] += wgt * f64::from(src[base + c]);
                }
            }
            let o = (y * w + x) * CHANNELS;
            out[o..o + CHANNELS].copy_from_slice(&acc);
        }
    }
    Ok(ImageBuffer::from_f64_samples(w, h, &out))
}

/// Horizontal pass with `kx` then vertical pass with `ky`, reflect-101
/// borders, real-valued intermediate, a single rounding at the end.
pub fn convolve_separable(img: &ImageBuffer, kx: &[f64], ky: &[f64]) -> Result<ImageBuffer> {
    if kx.len().is_multiple_of(2) || ky.len().is_multiple_of(2) {
        return Err(Error::invalid("separable kernel lengths must be odd"));
    }
    let (w, h) = img.dims();
    let src = img.to_f64_samples();
    let horizontal = pass_1d(&src, w, h, kx, true);
    let both = pass_1d(&horizontal, w, h, ky, false);
    Ok(ImageBuffer::from_f64_samples(w, h, &both))
}

fn pass_1d(src: &[f64], w: usize, h: usize, kernel: &[f64], horizontal: bool) -> Vec<f64> {
    let c = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; CHANNELS];
            for (k, &wgt) in kernel.iter().enumerate() {
                let off = c - k as isize;
                let (sx, sy) = if horizontal {
                    (reflect101(x as isize + off, w), y)
                } else {
                    (x, reflect101(y as isize + off, h))
                };
                let base = (sy * w + sx) * CHANNELS;
                for ch in 0..CHANNELS {
                    acc[ch] += wgt * src[base + ch];
                }
            }
            let o = (y * w + x) * CHANNELS;
            out[o..o + CHANNELS].copy_from_slice(&acc);
        }
    }
    out
}
