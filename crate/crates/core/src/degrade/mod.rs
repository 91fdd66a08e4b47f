//! The seven forensic degradation operators, their parameter grids, and
//! seeded sampling. Every operator is a pure function of (image, params, seed).

mod ops;
mod seed;

pub use ops::{
    channel_clip, down_up_scale, gaussian_blur, gaussian_kernel_1d, motion_blur, motion_kernel,
    multi_gen_jpeg, salt_pepper, screen_recapture,
};
pub use seed::{fnv1a64, Seed};

use std::fmt;
use std::str::FromStr;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::ImageBuffer;

pub const JPEG_CYCLES: [u32; 5] = [4, 5, 6, 7, 8];
pub const JPEG_QUALITIES: [u8; 5] = [8, 12, 16, 20, 25];
pub const SCALE_FACTORS: [u32; 4] = [3, 4, 5, 6];
pub const BLUR_SIGMAS: [f64; 5] = [2.5, 3.5, 4.5, 5.5, 6.5];
pub const MOTION_LENGTHS: [u32; 4] = [8, 12, 16, 20];
pub const NOISE_PROBABILITIES: [f64; 4] = [0.008, 0.012, 0.016, 0.020];
pub const CLIP_OFFSETS: [i32; 6] = [-35, -25, -15, 15, 25, 35];

/// Degradation category; `None` is the undegraded control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradationKind {
    None,
    ChannelClip,
    ScreenRecapture,
    MotionBlur,
    SaltPepper,
    GaussianBlur,
    MultiGenJpeg,
    DownUpScale,
}

impl DegradationKind {
    /// All eight conditions in report order.
    pub const ALL: [DegradationKind; 8] = [
        DegradationKind::None,
        DegradationKind::ChannelClip,
        DegradationKind::ScreenRecapture,
        DegradationKind::MotionBlur,
        DegradationKind::SaltPepper,
        DegradationKind::GaussianBlur,
        DegradationKind::MultiGenJpeg,
        DegradationKind::DownUpScale,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DegradationKind::None => "none",
            DegradationKind::ChannelClip => "channel_clip",
            DegradationKind::ScreenRecapture => "screen_recapture",
            DegradationKind::MotionBlur => "motion_blur",
            DegradationKind::SaltPepper => "salt_pepper",
            DegradationKind::GaussianBlur => "gaussian_blur",
            DegradationKind::MultiGenJpeg => "multi_gen_jpeg",
            DegradationKind::DownUpScale => "down_up_scale",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DegradationKind::None => "Original Images",
            DegradationKind::ChannelClip => "Color Channel Clipping",
            DegradationKind::ScreenRecapture => "Screen Recapture",
            DegradationKind::MotionBlur => "Motion Blur",
            DegradationKind::SaltPepper => "Salt-Pepper Noise",
            DegradationKind::GaussianBlur => "Gaussian Blur",
            DegradationKind::MultiGenJpeg => "Multi-Generation JPEG",
            DegradationKind::DownUpScale => "Down-Up Scaling",
        }
    }
}

impl fmt::Display for DegradationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DegradationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("original") {
            return Ok(DegradationKind::None);
        }
        DegradationKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown degradation kind {s:?}")))
    }
}

/// Darkening period that disables the grid stage of screen recapture.
pub const GRID_DISABLED: u32 = u32::MAX;

/// Stage parameters of the screen-recapture simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecaptureParams {
    /// Every `grid_period`-th row and column is darkened; [`GRID_DISABLED`] skips the stage.
    pub grid_period: u32,
    /// Moiré frequency in cycles per pixel along the diagonal.
    pub moire_freq: f64,
    /// Moiré amplitude in 8-bit levels.
    pub moire_amp: f64,
    /// Reflection strength in [0, 1]; the highlight peaks at 60 levels.
    pub reflect_strength: f64,
    pub recapture_quality: u8,
}

impl Default for RecaptureParams {
    fn default() -> Self {
        RecaptureParams {
            grid_period: 3,
            moire_freq: 0.11,
            moire_amp: 18.0,
            reflect_strength: 0.35,
            recapture_quality: 60,
        }
    }
}

impl RecaptureParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_period < 2 {
            return Err(Error::invalid(format!(
                "grid_period must be >= 2, got {}",
                self.grid_period
            )));
        }
        if !(0.0..=1.0).contains(&self.reflect_strength) {
            return Err(Error::invalid(format!(
                "reflect_strength must be in [0, 1], got {}",
                self.reflect_strength
            )));
        }
        if !self.moire_freq.is_finite() || !self.moire_amp.is_finite() {
            return Err(Error::invalid("moire parameters must be finite"));
        }
        if !(1..=100).contains(&self.recapture_quality) {
            return Err(Error::invalid(format!(
                "recapture_quality must be in [1, 100], got {}",
                self.recapture_quality
            )));
        }
        Ok(())
    }
}

/// One degradation kind together with its concrete parameters.
///
/// Serialises as `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DegradationSpec {
    None,
    MultiGenJpeg { cycles: u32, qualities: Vec<u8> },
    DownUpScale { factor: u32 },
    GaussianBlur { sigma: f64 },
    MotionBlur { length_px: u32, angle_deg: f64 },
    SaltPepper { p: f64 },
    ChannelClip { deltas: [i32; 3] },
    ScreenRecapture(RecaptureParams),
}

impl DegradationSpec {
    pub fn kind(&self) -> DegradationKind {
        match self {
            DegradationSpec::None => DegradationKind::None,
            DegradationSpec::MultiGenJpeg { .. } => DegradationKind::MultiGenJpeg,
            DegradationSpec::DownUpScale { .. } => DegradationKind::DownUpScale,
            DegradationSpec::GaussianBlur { .. } => DegradationKind::GaussianBlur,
            DegradationSpec::MotionBlur { .. } => DegradationKind::MotionBlur,
            DegradationSpec::SaltPepper { .. } => DegradationKind::SaltPepper,
            DegradationSpec::ChannelClip { .. } => DegradationKind::ChannelClip,
            DegradationSpec::ScreenRecapture(_) => DegradationKind::ScreenRecapture,
        }
    }

    /// Checks the parameter grids.
    pub fn validate(&self) -> Result<()> {
        fn on_grid<T: PartialEq + fmt::Debug>(name: &str, v: T, grid: &[T]) -> Result<()> {
            if grid.contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v:?} is not in {grid:?}")))
            }
        }
        match self {
            DegradationSpec::None => Ok(()),
            DegradationSpec::MultiGenJpeg { cycles, qualities } => {
                on_grid("cycles", *cycles, &JPEG_CYCLES)?;
                if qualities.len() != *cycles as usize {
                    return Err(Error::invalid(format!(
                        "{cycles} cycles need {cycles} qualities, got {}",
                        qualities.len()
                    )));
                }
                qualities
                    .iter()
                    .try_for_each(|&q| on_grid("quality", q, &JPEG_QUALITIES))
            }
            DegradationSpec::DownUpScale { factor } => on_grid("factor", *factor, &SCALE_FACTORS),
            DegradationSpec::GaussianBlur { sigma } => on_grid("sigma", *sigma, &BLUR_SIGMAS),
            DegradationSpec::MotionBlur {
                length_px,
                angle_deg,
            } => {
                on_grid("length_px", *length_px, &MOTION_LENGTHS)?;
                if !(0.0..180.0).contains(angle_deg) {
                    return Err(Error::invalid(format!(
                        "angle_deg must be in [0, 180), got {angle_deg}"
                    )));
                }
                Ok(())
            }
            DegradationSpec::SaltPepper { p } => on_grid("p", *p, &NOISE_PROBABILITIES),
            DegradationSpec::ChannelClip { deltas } => deltas
                .iter()
                .try_for_each(|&d| on_grid("delta", d, &CLIP_OFFSETS)),
            DegradationSpec::ScreenRecapture(params) => params.validate(),
        }
    }
}

fn pick<T: Copy>(rng: &mut impl RngExt, grid: &[T]) -> T {
    grid[rng.random_range(0..grid.len())]
}

/// Draws a spec for `kind` with the default screen-recapture parameters.
pub fn sample_spec(kind: DegradationKind, seed: Seed) -> Result<DegradationSpec> {
    sample_spec_with(kind, seed, &RecaptureParams::default())
}

/// Draws every grid-valued parameter uniformly from its legal set.
/// Screen-recapture parameters are taken from `recapture` as given.
pub fn sample_spec_with(
    kind: DegradationKind,
    seed: Seed,
    recapture: &RecaptureParams,
) -> Result<DegradationSpec> {
    let mut rng = seed.rng();
    let spec = match kind {
        DegradationKind::None => {
            return Err(Error::invalid(
                "the control condition has no parameters to sample",
            ))
        }
        DegradationKind::MultiGenJpeg => {
            let cycles = pick(&mut rng, &JPEG_CYCLES);
            let qualities = (0..cycles)
                .map(|_| pick(&mut rng, &JPEG_QUALITIES))
                .collect();
            DegradationSpec::MultiGenJpeg { cycles, qualities }
        }
        DegradationKind::DownUpScale => DegradationSpec::DownUpScale {
            factor: pick(&mut rng, &SCALE_FACTORS),
        },
        DegradationKind::GaussianBlur => DegradationSpec::GaussianBlur {
            sigma: pick(&mut rng, &BLUR_SIGMAS),
        },
        DegradationKind::MotionBlur => {
            let length_px = pick(&mut rng, &MOTION_LENGTHS);
            // random::<f64>() is in [0, 1), so the angle never reaches 180.
            let angle_deg = rng.random::<f64>() * 180.0;
            DegradationSpec::MotionBlur {
                length_px,
                angle_deg,
            }
        }
        DegradationKind::SaltPepper => DegradationSpec::SaltPepper {
            p: pick(&mut rng, &NOISE_PROBABILITIES),
        },
        DegradationKind::ChannelClip => DegradationSpec::ChannelClip {
            deltas: [
                pick(&mut rng, &CLIP_OFFSETS),
                pick(&mut rng, &CLIP_OFFSETS),
                pick(&mut rng, &CLIP_OFFSETS),
            ],
        },
        DegradationKind::ScreenRecapture => DegradationSpec::ScreenRecapture(*recapture),
    };
    Ok(spec)
}

/// Directions enumerated for motion blur in sweep mode.
pub const SWEEP_ANGLES: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

/// Enumerates the parameter grid of `kind` for ablation sweeps.
///
/// Multi-generation JPEG uses one quality for all cycles (5 × 5 specs rather
/// than every per-cycle assignment), motion blur crosses lengths with
/// [`SWEEP_ANGLES`], and channel clipping enumerates all 6³ offset triples.
/// Screen recapture yields the single configured parameter record.
pub fn sweep_specs(kind: DegradationKind, recapture: &RecaptureParams) -> Vec<DegradationSpec> {
    match kind {
        DegradationKind::None => vec![DegradationSpec::None],
        DegradationKind::MultiGenJpeg => JPEG_CYCLES
            .iter()
            .flat_map(|&cycles| {
                JPEG_QUALITIES
                    .iter()
                    .map(move |&q| DegradationSpec::MultiGenJpeg {
                        cycles,
                        qualities: vec![q; cycles as usize],
                    })
            })
            .collect(),
        DegradationKind::DownUpScale => SCALE_FACTORS
            .iter()
            .map(|&factor| DegradationSpec::DownUpScale { factor })
            .collect(),
        DegradationKind::GaussianBlur => BLUR_SIGMAS
            .iter()
            .map(|&sigma| DegradationSpec::GaussianBlur { sigma })
            .collect(),
        DegradationKind::MotionBlur => MOTION_LENGTHS
            .iter()
            .flat_map(|&length_px| {
                SWEEP_ANGLES
                    .iter()
                    .map(move |&angle_deg| DegradationSpec::MotionBlur {
                        length_px,
                        angle_deg,
                    })
            })
            .collect(),
        DegradationKind::SaltPepper => NOISE_PROBABILITIES
            .iter()
            .map(|&p| DegradationSpec::SaltPepper { p })
            .collect(),
        DegradationKind::ChannelClip => CLIP_OFFSETS
            .iter()
            .flat_map(|&r| {
                CLIP_OFFSETS.iter().flat_map(move |&g| {
                    CLIP_OFFSETS
                        .iter()
                        .map(move |&b| DegradationSpec::ChannelClip { deltas: [r, g, b] })
                })
            })
            .collect(),
        DegradationKind::ScreenRecapture => vec![DegradationSpec::ScreenRecapture(*recapture)],
    }
}

/// Applies `spec` to `img`. The control condition returns the input.
pub fn apply(img: &ImageBuffer, spec: &DegradationSpec, seed: Seed) -> Result<ImageBuffer> {
    spec.validate()?;
    apply_unchecked(img, spec, seed)
}

/// Dispatch without grid validation; operator preconditions still hold.
/// Used where off-grid parameters are wanted for inspection.
pub fn apply_unchecked(
    img: &ImageBuffer,
    spec: &DegradationSpec,
    seed: Seed,
) -> Result<ImageBuffer> {
    let out = match spec {
        DegradationSpec::None => img.clone(),
        DegradationSpec::MultiGenJpeg { cycles, qualities } => {
            multi_gen_jpeg(img, *cycles, qualities)?
        }
        DegradationSpec::DownUpScale { factor } => down_up_scale(img, *factor)?,
        DegradationSpec::GaussianBlur { sigma } => gaussian_blur(img, *sigma)?,
        DegradationSpec::MotionBlur {
            length_px,
            angle_deg,
        } => motion_blur(img, *length_px, *angle_deg)?,
        DegradationSpec::SaltPepper { p } => salt_pepper(img, *p, seed)?,
        DegradationSpec::ChannelClip { deltas } => channel_clip(img, *deltas),
        DegradationSpec::ScreenRecapture(params) => screen_recapture(img, params, seed)?,
    };
    debug_assert_eq!(out.dims(), img.dims());
    Ok(out)
}
