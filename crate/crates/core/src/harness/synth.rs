//! Procedural stand-in faces for hermetic end-to-end runs.

use std::path::{Path, PathBuf};

use rand::RngExt;

use crate::degrade::Seed;
use crate::error::{Error, Result};
use crate::imagecore::{quantize, save_image, ImageBuffer, SaveFormat};

pub const FACE_SIDE: usize = 96;
/// Master seed of the bundled fixture.
pub const FIXTURE_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy)]
struct FaceParams {
    background: [f64; 3],
    skin: [f64; 3],
    hair: [f64; 3],
    face_rx: f64,
    face_ry: f64,
    hairline: f64,
    eye_dx: f64,
    eye_y: f64,
    eye_r: f64,
    mouth_y: f64,
    mouth_w: f64,
    nose_len: f64,
}

fn color(rng: &mut impl RngExt, lo: f64, hi: f64) -> [f64; 3] {
    [0; 3].map(|_| rng.random_range(lo..hi))
}

impl FaceParams {
    fn sample(seed: Seed) -> Self {
        let mut rng = seed.rng();
        FaceParams {
            background: color(&mut rng, 20.0, 235.0),
            skin: color(&mut rng, 90.0, 230.0),
            hair: color(&mut rng, 10.0, 140.0),
            face_rx: rng.random_range(0.26..0.38),
            face_ry: rng.random_range(0.34..0.44),
            hairline: rng.random_range(-0.30..-0.12),
            eye_dx: rng.random_range(0.08..0.16),
            eye_y: rng.random_range(-0.10..0.02),
            eye_r: rng.random_range(0.025..0.05),
            mouth_y: rng.random_range(0.16..0.26),
            mouth_w: rng.random_range(0.06..0.14),
            nose_len: rng.random_range(0.05..0.12),
        }
    }
}

/// Renders image `variant` of the identity seeded by `seed`. Variants of one
/// identity differ by a small shift and a lighting change.
pub fn synth_face(seed: Seed, variant: u64) -> ImageBuffer {
    let p = FaceParams::sample(seed);
    let mut rng = seed.child(1 + variant).rng();
    let shift_x = rng.random_range(-0.03..0.03);
    let shift_y = rng.random_range(-0.03..0.03);
    let gain = rng.random_range(0.9..1.1);
    let side = FACE_SIDE as f64;

    ImageBuffer::from_fn(FACE_SIDE, FACE_SIDE, |x, y| {
        let u = (x as f64 + 0.5) / side - 0.5 - shift_x;
        let v = (y as f64 + 0.5) / side - 0.5 - shift_y;
        let in_face = (u / p.face_rx).powi(2) + (v / p.face_ry).powi(2) <= 1.0;
        let in_hair = (u / (p.face_rx * 1.12)).powi(2) + (v / (p.face_ry * 1.08)).powi(2) <= 1.0
            && v < p.hairline;
        let eye = |cx: f64| (u - cx).powi(2) + (v - p.eye_y).powi(2) <= p.eye_r.powi(2);
        let in_eye = eye(-p.eye_dx) || eye(p.eye_dx);
        let in_nose = u.abs() < 0.012 && v > p.eye_y + 0.03 && v < p.eye_y + 0.03 + p.nose_len;
        let in_mouth = u.abs() < p.mouth_w && (v - p.mouth_y).abs() < 0.018;

        let base = if in_hair {
            p.hair
        } else if in_face {
            if in_eye || in_mouth {
                [30.0, 20.0, 25.0]
            } else if in_nose {
                p.skin.map(|c| c * 0.8)
            } else {
                // Side lighting gives the cheeks some shading.
                p.skin.map(|c| c * (1.0 - 0.25 * u))
            }
        } else {
            p.background
        };
        base.map(|c| quantize(c * gain))
    })
    .expect("fixed positive dimensions")
}

/// Writes `identities` people with two images each as
/// `person_NN/img_0.png` (reference) and `person_NN/img_1.png` (probe).
pub fn write_fixture(dir: &Path, identities: usize, master: u64) -> Result<Vec<PathBuf>> {
    if identities == 0 {
        return Err(Error::invalid("fixture needs at least one identity"));
    }
    let width = identities.to_string().len().max(2);
    let mut written = Vec::with_capacity(2 * identities);
    for i in 0..identities {
        let name = format!("person_{i:0width$}");
        let person = dir.join(&name);
        std::fs::create_dir_all(&person).map_err(|e| Error::io(&person, e))?;
        let seed = Seed::derive(Seed(master), &name, "face");
        for variant in 0..2 {
            let path = person.join(format!("img_{variant}.png"));
            save_image(&synth_face(seed, variant), &path, SaveFormat::Png)?;
            written.push(path);
        }
    }
    Ok(written)
}
