use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::evalcore::Embedding;
use crate::imagecore::{load_image, resize_bicubic, ImageBuffer};

/// Side length of the mock embedding's luminance thumbnail.
pub const MOCK_SIDE: usize = 16;
pub const MOCK_DIM: usize = MOCK_SIDE * MOCK_SIDE;

const STDERR_EXCERPT: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnhanceBackend {
    /// Byte-for-byte copy; enhancement is a no-op.
    Identity,
    /// Command template with `{in}` and `{out}` placeholders.
    Command(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedBackend {
    /// Normalised 16x16 luminance thumbnail.
    Mock,
    /// Command template with an `{in}` placeholder printing a JSON array.
    Command(String),
}

impl EnhanceBackend {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "identity" {
            return Ok(EnhanceBackend::Identity);
        }
        for ph in ["{in}", "{out}"] {
            if !spec.contains(ph) {
                return Err(Error::Validation(format!(
                    "enhance_cmd must be \"identity\" or contain {ph}: {spec:?}"
                )));
            }
        }
        Ok(EnhanceBackend::Command(spec.to_string()))
    }

    pub fn describe(&self) -> &str {
        match self {
            EnhanceBackend::Identity => "identity",
            EnhanceBackend::Command(c) => c,
        }
    }
}

impl EmbedBackend {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "mock" {
            return Ok(EmbedBackend::Mock);
        }
        if !spec.contains("{in}") {
            return Err(Error::Validation(format!(
                "embed_cmd must be \"mock\" or contain {{in}}: {spec:?}"
            )));
        }
        Ok(EmbedBackend::Command(spec.to_string()))
    }

    pub fn describe(&self) -> &str {
        match self {
            EmbedBackend::Mock => "mock",
            EmbedBackend::Command(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub enhance: EnhanceBackend,
    pub embed: EmbedBackend,
    pub timeout: Duration,
    /// Expected length of command-backend embeddings.
    pub embed_dim: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            enhance: EnhanceBackend::Identity,
            embed: EmbedBackend::Mock,
            timeout: Duration::from_secs(120),
            embed_dim: 512,
        }
    }
}

impl BackendConfig {
    pub fn new(
        enhance_cmd: &str,
        embed_cmd: &str,
        timeout_s: f64,
        embed_dim: usize,
    ) -> Result<Self> {
        if !timeout_s.is_finite() || timeout_s <= 0.0 {
            return Err(Error::Validation(format!(
                "timeout_s must be positive, got {timeout_s}"
            )));
        }
        if embed_dim == 0 {
            return Err(Error::Validation("embed_dim must be positive".into()));
        }
        Ok(BackendConfig {
            enhance: EnhanceBackend::parse(enhance_cmd)?,
            embed: EmbedBackend::parse(embed_cmd)?,
            timeout: Duration::from_secs_f64(timeout_s),
            embed_dim,
        })
    }

    /// Dimension of the vectors this configuration produces.
    pub fn output_dim(&self) -> usize {
        match self.embed {
            EmbedBackend::Mock => MOCK_DIM,
            EmbedBackend::Command(_) => self.embed_dim,
        }
    }
}

fn path_str(p: &Path) -> Result<&str> {
    p.to_str()
        .ok_or_else(|| Error::Validation(format!("non UTF-8 path {}", p.display())))
}

/// Splits the template into words, then substitutes placeholders inside each
/// word, so paths with spaces never need shell quoting.
fn build_argv(template: &str, subs: &[(&str, &str)]) -> Result<Vec<String>> {
    let words = shell_words::split(template)
        .map_err(|e| Error::Validation(format!("cannot parse command {template:?}: {e}")))?;
    if words.is_empty() {
        return Err(Error::Validation("empty backend command".into()));
    }
    Ok(words
        .into_iter()
        .map(|w| subs.iter().fold(w, |acc, (k, v)| acc.replace(k, v)))
        .collect())
}

fn excerpt(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    let s = s.trim();
    if s.len() <= STDERR_EXCERPT {
        return s.to_string();
    }
    let mut start = s.len() - STDERR_EXCERPT;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    format!("...{}", &s[start..])
}

fn drain(mut r: impl Read + Send + 'static) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

/// Runs `argv`, returning standard output on exit status 0.
fn run_process(argv: &[String], timeout: Duration) -> Result<Vec<u8>> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Backend(format!("cannot start {:?}: {e}", argv[0])))?;
    let out = drain(child.stdout.take().expect("piped"));
    let err = drain(child.stderr.take().expect("piped"));

    let status = match child
        .wait_timeout(timeout)
        .map_err(|e| Error::Backend(format!("waiting for {:?}: {e}", argv[0])))?
    {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::BackendTimeout(timeout.as_secs_f64()));
        }
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !status.success() {
        return Err(Error::Backend(format!(
            "{:?} exited with {status}: {}",
            argv[0],
            excerpt(&stderr)
        )));
    }
    Ok(stdout)
}

/// Enhances `image_path` into `out_path`. Command backends must exit 0 and
/// leave a decodable image with the input's dimensions.
pub fn enhance(image_path: &Path, backend: &BackendConfig, out_path: &Path) -> Result<PathBuf> {
    if !image_path.is_file() {
        return Err(Error::io(
            image_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "enhancement input missing"),
        ));
    }
    match &backend.enhance {
        EnhanceBackend::Identity => {
            std::fs::copy(image_path, out_path).map_err(|e| Error::io(out_path, e))?;
        }
        EnhanceBackend::Command(template) => {
            let input = load_image(image_path)?;
            // A stale file from an earlier attempt must not satisfy the contract.
            let _ = std::fs::remove_file(out_path);
            let argv = build_argv(
                template,
                &[
                    ("{in}", path_str(image_path)?),
                    ("{out}", path_str(out_path)?),
                ],
            )?;
            run_process(&argv, backend.timeout)?;
            let output = load_image(out_path)
                .map_err(|e| Error::Backend(format!("enhancement output unusable: {e}")))?;
            if output.dims() != input.dims() {
                return Err(Error::Backend(format!(
                    "enhancement changed dimensions from {:?} to {:?}",
                    input.dims(),
                    output.dims()
                )));
            }
        }
    }
    Ok(out_path.to_path_buf())
}

/// Mock recogniser: luminance, bicubic 16x16 thumbnail, mean removed, unit norm.
pub fn mock_embedding(img: &ImageBuffer) -> Result<Embedding> {
    let gray = ImageBuffer::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.pixel(x, y);
        let l = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
        [crate::imagecore::quantize(l); 3]
    })?;
    let thumb = resize_bicubic(&gray, MOCK_SIDE, MOCK_SIDE)?;
    let values: Vec<f64> = thumb
        .pixels()
        .iter()
        .step_by(3)
        .map(|&v| f64::from(v))
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput(
            "mock embedding of a constant-luminance image".into(),
        ));
    }
    Embedding::new(centred.into_iter().map(|v| v / norm).collect())
}

/// Parses a JSON array of exactly `dim` numbers.
pub fn parse_embedding(stdout: &[u8], dim: usize) -> Result<Embedding> {
    let values: Vec<f64> = serde_json::from_slice(stdout).map_err(|e| {
        Error::Backend(format!(
            "embedding output is not a JSON number array ({e}): {}",
            excerpt(stdout)
        ))
    })?;
    if values.len() != dim {
        return Err(Error::Backend(format!(
            "embedding has {} values, expected {dim}",
            values.len()
        )));
    }
    Embedding::new(values).map_err(|e| Error::Backend(e.to_string()))
}

pub fn embed(image_path: &Path, backend: &BackendConfig) -> Result<Embedding> {
    match &backend.embed {
        EmbedBackend::Mock => mock_embedding(&load_image(image_path)?),
        EmbedBackend::Command(template) => {
            if !image_path.is_file() {
                return Err(Error::io(
                    image_path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "embedding input missing"),
                ));
            }
            let argv = build_argv(template, &[("{in}", path_str(image_path)?)])?;
            let stdout = run_process(&argv, backend.timeout)?;
            parse_embedding(&stdout, backend.embed_dim)
        }
    }
}
