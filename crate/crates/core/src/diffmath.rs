//! Formula-level numerics of the enhancement pipeline: latent geometry,
//! low-rank weight merging, conditioning, guidance and the sampling schedule.
//! No network is evaluated here; a real backend wires these into its loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels of the VAE latent.
pub const LATENT_CHANNELS: usize = 16;
/// Spatial downsampling factor of the VAE.
pub const LATENT_STRIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl LatentShape {
    pub fn dims(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Latent geometry for an `image_h x image_w` input.
pub fn latent_shape(image_h: usize, image_w: usize) -> Result<LatentShape> {
    if image_h == 0 || image_w == 0 {
        return Err(Error::shape("image dimensions must be positive"));
    }
    if !image_h.is_multiple_of(LATENT_STRIDE) || !image_w.is_multiple_of(LATENT_STRIDE) {
        return Err(Error::shape(format!(
            "{image_h}x{image_w} is not divisible by {LATENT_STRIDE}"
        )));
    }
    Ok(LatentShape {
        channels: LATENT_CHANNELS,
        height: image_h / LATENT_STRIDE,
        width: image_w / LATENT_STRIDE,
    })
}

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out[i * rhs.cols..(i + 1) * rhs.cols].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Matrix::new(self.rows, rhs.cols, out)
    }
}

/// `W = W0 + alpha * (B x A)` for a `d x r` up-projection `B` and an
/// `r x k` down-projection `A`.
pub fn lora_merge(w0: &Matrix, b: &Matrix, a: &Matrix, alpha: f64) -> Result<Matrix> {
    if b.cols != a.rows {
        return Err(Error::shape(format!(
            "LoRA rank mismatch: B has {} columns, A has {} rows",
            b.cols, a.rows
        )));
    }
    if (b.rows, a.cols) != (w0.rows, w0.cols) {
        return Err(Error::shape(format!(
            "update is {}x{} but base weight is {}x{}",
            b.rows, a.cols, w0.rows, w0.cols
        )));
    }
    if alpha == 0.0 {
        return Ok(w0.clone());
    }
    let delta = b.matmul(a)?;
    let data = w0
        .data
        .iter()
        .zip(&delta.data)
        .map(|(&w, &d)| w + alpha * d)
        .collect();
    Matrix::new(w0.rows, w0.cols, data)
}

/// `c = e_t + gamma * e_i`.
pub fn combine_conditioning(text: &[f64], image: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if text.len() != image.len() {
        return Err(Error::shape(format!(
            "text embedding has {} values, image embedding {}",
            text.len(),
            image.len()
        )));
    }
    Ok(text
        .iter()
        .zip(image)
        .map(|(&t, &i)| t + gamma * i)
        .collect())
}

/// Real tensor with an explicit shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// Classifier-free guidance: `(1 + w) * eps_cond - w * eps_uncond`.
pub fn cfg_combine(eps_cond: &Tensor, eps_uncond: &Tensor, w: f64) -> Result<Tensor> {
    if eps_cond.shape != eps_uncond.shape {
        return Err(Error::shape(format!(
            "conditional {:?} vs unconditional {:?}",
            eps_cond.shape, eps_uncond.shape
        )));
    }
    let data = eps_cond
        .data
        .iter()
        .zip(&eps_uncond.data)
        .map(|(&c, &u)| (1.0 + w) * c - w * u)
        .collect();
    Ok(Tensor {
        shape: eps_cond.shape.clone(),
        data,
    })
}

/// `steps` timesteps starting at `total - 1` with stride `total / steps`,
/// strictly decreasing.
pub fn ddim_timesteps(total: usize, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 || steps > total {
        return Err(Error::invalid(format!(
            "steps must be in [1, {total}], got {steps}"
        )));
    }
    let stride = total / steps;
    Ok((0..steps).map(|i| total - 1 - i * stride).collect())
}

/// Enhancement hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Classifier-free guidance weight.
    pub w: f64,
    /// Image-embedding weight in the conditioning.
    pub gamma: f64,
    /// LoRA scale.
    pub alpha: f64,
    pub rank: usize,
    pub steps: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            w: 2.8,
            gamma: 0.12,
            alpha: 0.8,
            rank: 64,
            steps: 20,
        }
    }
}
