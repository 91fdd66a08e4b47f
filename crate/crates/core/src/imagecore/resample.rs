use super::{ImageBuffer, CHANNELS};
use crate::error::{Error, Result};

const CUBIC_A: f64 = -0.5;

fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Catmull-Rom weights for the taps at offsets -1, 0, +1, +2 from
/// `floor(src)`, where `t = src - floor(src)`.
pub fn catmull_rom_weights(t: f64) -> [f64; 4] {
    [cubic(1.0 + t), cubic(t), cubic(1.0 - t), cubic(2.0 - t)]
}

struct Taps {
    index: [usize; 4],
    weight: [f64; 4],
}

/// Pixel-centre aligned mapping with clamp-to-edge sampling.
fn taps_for(out_len: usize, in_len: usize) -> Vec<Taps> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = (o as f64 + 0.5) * scale - 0.5;
            let base = src.floor();
            let t = src - base;
            let base = base as isize;
            let clamp = |i: isize| i.clamp(0, in_len as isize - 1) as usize;
            Taps {
                index: [
                    clamp(base - 1),
                    clamp(base),
                    clamp(base + 1),
                    clamp(base + 2),
                ],
                weight: catmull_rom_weights(t),
            }
        })
        .collect()
}

/// Bicubic (Catmull-Rom, a = -0.5) resize with edge clamping. Resizing to
/// the input's own size returns the input unchanged.
pub fn resize_bicubic(img: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!(
            "output dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    let (w, h) = img.dims();
    if (out_w, out_h) == (w, h) {
        return Ok(img.clone());
    }
    let src = img.pixels();

    let xt = taps_for(out_w, w);
    let mut horizontal = vec![0.0f64; out_w * h * CHANNELS];
    for y in 0..h {
        for (ox, tap) in xt.iter().enumerate() {
            let o = (y * out_w + ox) * CHANNELS;
            for k in 0..4 {
                let s = (y * w + tap.index[k]) * CHANNELS;
                for c in 0..CHANNELS {
                    horizontal[o + c] += tap.weight[k] * f64::from(src[s + c]);
                }
            }
        }
    }

    let yt = taps_for(out_h, h);
    let mut out = vec![0.0f64; out_w * out_h * CHANNELS];
    for (oy, tap) in yt.iter().enumerate() {
        for x in 0..out_w {
            let o = (oy * out_w + x) * CHANNELS;
            for k in 0..4 {
                let s = (tap.index[k] * out_w + x) * CHANNELS;
                for c in 0..CHANNELS {
                    out[o + c] += tap.weight[k] * horizontal[s + c];
                }
            }
        }
    }
    Ok(ImageBuffer::from_f64_samples(out_w, out_h, &out))
}
