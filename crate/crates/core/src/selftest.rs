//! Quick invariant checks over the numerics and the degradation operators,
//! run by `fdb selftest`.

use crate::degrade::{
    apply, apply_unchecked, gaussian_kernel_1d, motion_kernel, sample_spec_with, DegradationKind,
    DegradationSpec, RecaptureParams, Seed,
};
use crate::diffmath::{
    cfg_combine, combine_conditioning, ddim_timesteps, latent_shape, lora_merge, Matrix, Tensor,
};
use crate::error::Result;
use crate::imagecore::{catmull_rom_weights, reflect101, resize_bicubic, ImageBuffer};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<std::result::Result<(), String>>) -> Check {
    let (passed, detail) = match outcome {
        Ok(Ok(())) => (true, String::new()),
        Ok(Err(why)) => (false, why),
        Err(e) => (false, e.to_string()),
    };
    Check {
        name,
        passed,
        detail,
    }
}

fn expect(cond: bool, why: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn sample_image() -> Result<ImageBuffer> {
    ImageBuffer::from_fn(48, 40, |x, y| {
        [(x * 5 + y) as u8, (y * 6) as u8, ((x * y) % 251) as u8]
    })
}

fn cfg_checks() -> Result<std::result::Result<(), String>> {
    let cond = Tensor::new(vec![3], vec![1.0, -2.0, 0.5])?;
    let uncond = Tensor::new(vec![3], vec![0.5, 4.0, -1.0])?;
    let w0 = cfg_combine(&cond, &uncond, 0.0)?;
    if w0.data() != cond.data() {
        return Ok(Err(format!("w=0 gave {:?}", w0.data())));
    }
    let same = cfg_combine(&cond, &cond, 7.5)?;
    if same.data() != cond.data() {
        return Ok(Err(format!("equal inputs gave {:?}", same.data())));
    }
    let v = cfg_combine(
        &Tensor::new(vec![1], vec![1.0])?,
        &Tensor::new(vec![1], vec![0.5])?,
        2.8,
    )?;
    Ok(expect((v.data()[0] - 2.4).abs() < 1e-12, || {
        format!("got {}", v.data()[0])
    }))
}

fn lora_checks() -> Result<std::result::Result<(), String>> {
    let w0 = Matrix::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])?;
    let b = Matrix::new(3, 1, vec![1.0, 0.0, -1.0])?;
    let a = Matrix::new(1, 2, vec![2.0, 3.0])?;
    if lora_merge(&w0, &b, &a, 0.0)? != w0 {
        return Ok(Err("alpha = 0 changed the weight".into()));
    }
    let merged = lora_merge(&w0, &b, &a, 0.5)?;
    let want = [2.0, 3.5, 3.0, 4.0, 4.0, 4.5];
    Ok(expect(merged.as_slice() == want, || {
        format!("got {:?}", merged.as_slice())
    }))
}

fn latent_checks() -> Result<std::result::Result<(), String>> {
    let s = latent_shape(512, 512)?;
    if s.dims() != [16, 64, 64] {
        return Ok(Err(format!("512x512 gave {:?}", s.dims())));
    }
    Ok(expect(latent_shape(500, 512).is_err(), || {
        "500 rows accepted".into()
    }))
}

fn conditioning_checks() -> Result<std::result::Result<(), String>> {
    let c = combine_conditioning(&[1.0, 2.0], &[10.0, -10.0], 0.12)?;
    let ok = (c[0] - 2.2).abs() < 1e-12 && (c[1] - 0.8).abs() < 1e-12;
    Ok(expect(ok, || format!("got {c:?}")))
}

fn timestep_checks() -> Result<std::result::Result<(), String>> {
    let t = ddim_timesteps(1000, 20)?;
    let ok = t.len() == 20
        && t[0] == 999
        && *t.last().unwrap() < 50
        && t.windows(2).all(|w| w[0] > w[1]);
    Ok(expect(ok, || format!("got {t:?}")))
}

fn kernel_checks() -> Result<std::result::Result<(), String>> {
    for t in [0.0, 0.25, 0.5, 0.9] {
        let s: f64 = catmull_rom_weights(t).iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Ok(Err(format!("cubic weights at {t} sum to {s}")));
        }
    }
    for sigma in [2.5, 6.5] {
        let s: f64 = gaussian_kernel_1d(sigma)?.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Ok(Err(format!("gaussian sigma {sigma} sums to {s}")));
        }
    }
    for (len, angle) in [(8, 0.0), (20, 45.0), (12, 135.0)] {
        let k = motion_kernel(len, angle)?;
        if !k.is_normalized() {
            return Ok(Err(format!(
                "motion kernel {len}@{angle} sums to {}",
                k.sum()
            )));
        }
    }
    let reflected = [reflect101(-1, 5), reflect101(5, 5), reflect101(-2, 5)];
    Ok(expect(reflected == [1, 3, 2], || {
        format!("reflect-101 gave {reflected:?}")
    }))
}

fn identity_family() -> Result<std::result::Result<(), String>> {
    let img = sample_image()?;
    let specs = [
        DegradationSpec::None,
        DegradationSpec::SaltPepper { p: 0.0 },
        DegradationSpec::ChannelClip { deltas: [0, 0, 0] },
        DegradationSpec::DownUpScale { factor: 1 },
        DegradationSpec::MotionBlur {
            length_px: 1,
            angle_deg: 30.0,
        },
    ];
    for spec in &specs {
        if apply_unchecked(&img, spec, Seed(3))? != img {
            return Ok(Err(format!("{spec:?} changed the image")));
        }
    }
    Ok(expect(resize_bicubic(&img, 48, 40)? == img, || {
        "same-size resize changed the image".into()
    }))
}

fn determinism() -> Result<std::result::Result<(), String>> {
    let img = sample_image()?;
    let recapture = RecaptureParams::default();
    for kind in DegradationKind::ALL {
        let spec = match kind {
            DegradationKind::None => DegradationSpec::None,
            _ => sample_spec_with(kind, Seed(11), &recapture)?,
        };
        let a = apply(&img, &spec, Seed(5))?;
        let b = apply(&img, &spec, Seed(5))?;
        if a != b {
            return Ok(Err(format!("{} is not deterministic", kind.label())));
        }
        if a.dims() != img.dims() {
            return Ok(Err(format!("{} changed dimensions", kind.label())));
        }
    }
    Ok(Ok(()))
}

/// Runs every check; never panics.
pub fn run_selftest() -> Vec<Check> {
    vec![
        check("cfg_combine identities", cfg_checks()),
        check("lora_merge identity and hand value", lora_checks()),
        check("latent_shape", latent_checks()),
        check("combine_conditioning", conditioning_checks()),
        check("ddim_timesteps", timestep_checks()),
        check("kernel normalisation and borders", kernel_checks()),
        check("identity-parameter operators", identity_family()),
        check("operator determinism", determinism()),
    ]
}
