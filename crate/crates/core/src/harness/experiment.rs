use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{embed, enhance, BackendConfig};
use super::config::{ExperimentConfig, ParamsMode, Protocol};
use super::dataset::{ingest_dataset, DatasetManifest, ManifestEntry};
use crate::degrade::{
    apply, fnv1a64, sample_spec_with, sweep_specs, DegradationKind, DegradationSpec,
    RecaptureParams, Seed,
};
use crate::error::{Error, Result};
use crate::evalcore::{Condition, Embedding, Gallery, TrialRecord};
use crate::imagecore::{load_image, save_image, SaveFormat};

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const GALLERY_FILE: &str = "gallery.json";
pub const IMAGES_DIR: &str = "images";

/// One identity under one degradation spec; yields a baseline and an
/// enhanced trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialUnit {
    pub entry: ManifestEntry,
    /// Kind label, suffixed with `@index` in sweep mode.
    pub label: String,
    pub spec: DegradationSpec,
    /// Seed for stochastic operators.
    pub op_seed: Seed,
}

impl TrialUnit {
    pub fn baseline_condition(&self) -> Condition {
        if self.spec.kind() == DegradationKind::None {
            Condition::Original
        } else {
            Condition::Degraded
        }
    }

    pub fn key(&self, condition: Condition) -> String {
        condition_key(&self.entry.identity_id, &self.label, condition)
    }
}

pub fn condition_key(identity: &str, label: &str, condition: Condition) -> String {
    format!("{identity}|{label}|{}", condition.label())
}

/// Expands the manifest into trial units, identity-major.
pub fn plan_units(
    manifest: &DatasetManifest,
    kinds: &[DegradationKind],
    mode: ParamsMode,
    master: Seed,
    recapture: &RecaptureParams,
) -> Result<Vec<TrialUnit>> {
    let mut units = Vec::new();
    for entry in &manifest.entries {
        for &kind in kinds {
            let specs: Vec<(String, DegradationSpec)> = match (mode, kind) {
                (_, DegradationKind::None) => {
                    vec![(kind.label().to_string(), DegradationSpec::None)]
                }
                (ParamsMode::Sampled, _) => {
                    let seed = Seed::derive(master, &entry.identity_id, kind.label());
                    vec![(
                        kind.label().to_string(),
                        sample_spec_with(kind, seed, recapture)?,
                    )]
                }
                (ParamsMode::Sweep, _) => sweep_specs(kind, recapture)
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| (format!("{}@{i}", kind.label()), s))
                    .collect(),
            };
            for (label, spec) in specs {
                let op_seed = Seed::derive(master, &entry.identity_id, &label).child(0);
                units.push(TrialUnit {
                    entry: entry.clone(),
                    label,
                    spec,
                    op_seed,
                });
            }
        }
    }
    Ok(units)
}

/// Number of trials a run will record: two per unit.
pub fn planned_trials(units: &[TrialUnit]) -> usize {
    2 * units.len()
}

/// Loads `path` as a manifest CSV (paths relative to its directory) or, for
/// a directory, auto-pairs the person-per-directory layout.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    if path.is_dir() {
        let report = ingest_dataset(path, None)?;
        if !report.skipped.is_empty() {
            log::warn!(
                "{} identities skipped during ingestion",
                report.skipped.len()
            );
        }
        return Ok(report.manifest);
    }
    let root = path.parent().unwrap_or(Path::new("."));
    DatasetManifest::read_csv(path, root)
}

#[derive(Debug, Serialize, Deserialize)]
struct GalleryCache {
    backend: String,
    entries: BTreeMap<String, Vec<f64>>,
}

fn load_or_build_gallery(
    manifest: &DatasetManifest,
    backends: &BackendConfig,
    out_dir: &Path,
) -> Result<Gallery> {
    let path = out_dir.join(GALLERY_FILE);
    let ids: Vec<&str> = manifest
        .entries
        .iter()
        .map(|e| e.identity_id.as_str())
        .collect();
    if let Ok(text) = std::fs::read_to_string(&path) {
        match serde_json::from_str::<GalleryCache>(&text) {
            Ok(cache)
                if cache.backend == backends.embed.describe()
                    && cache.entries.keys().map(String::as_str).eq(sorted(&ids)) =>
            {
                let enrolled = cache
                    .entries
                    .into_iter()
                    .map(|(id, v)| Embedding::new(v).map(|e| (id, e)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                return Gallery::new(&enrolled);
            }
            _ => log::info!("gallery cache is stale; re-embedding references"),
        }
    }

    let embedded = manifest
        .entries
        .par_iter()
        .map(|e| {
            let p = manifest.resolve(&e.reference_path);
            embed(&p, backends).map(|emb| (e.identity_id.clone(), emb))
        })
        .collect::<Result<Vec<_>>>()?;
    let enrolled: BTreeMap<String, Embedding> = embedded.into_iter().collect();
    let cache = GalleryCache {
        backend: backends.embed.describe().to_string(),
        entries: enrolled
            .iter()
            .map(|(k, v)| (k.clone(), v.values().to_vec()))
            .collect(),
    };
    let tmp = out_dir.join(format!("{GALLERY_FILE}.tmp"));
    let json = serde_json::to_string(&cache).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&tmp, json).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Gallery::new(&enrolled)
}

fn sorted<'a>(ids: &[&'a str]) -> Vec<&'a str> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v
}

/// Reads the records of an existing trials file, dropping a partially
/// written last line.
pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let rec: TrialRecord = serde_json::from_str(l)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
            rec.check()?;
            Ok(rec)
        })
        .collect()
}

/// Cuts a torn trailing line so appends start on a fresh line.
fn truncate_partial_line(path: &Path) -> Result<()> {
    let Ok(bytes) = std::fs::read(path) else {
        return Ok(());
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    log::warn!("{}: dropping partial trailing record", path.display());
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.set_len(keep as u64).map_err(|e| Error::io(path, e))
}

fn path_component(id: &str) -> String {
    let clean: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if clean == id && !clean.starts_with('.') {
        clean
    } else {
        format!("{clean}-{:08x}", fnv1a64(id.as_bytes()) as u32)
    }
}

struct Context<'a> {
    manifest: &'a DatasetManifest,
    config: &'a ExperimentConfig,
    gallery: &'a Gallery,
    images_dir: PathBuf,
}

fn error_trial(unit: &TrialUnit, condition: Condition, err: &Error) -> TrialRecord {
    TrialRecord {
        identity_id: unit.entry.identity_id.clone(),
        probe_image_id: unit.entry.probe_path.clone(),
        reference_image_id: unit.entry.reference_path.clone(),
        condition,
        spec: unit.spec.clone(),
        similarity: 0.0,
        predicted_identity: None,
        accepted: false,
        correct: false,
        condition_key: unit.key(condition),
        error: Some(err.to_string()),
    }
}

impl Context<'_> {
    fn decide(
        &self,
        unit: &TrialUnit,
        condition: Condition,
        emb: &Embedding,
    ) -> Result<TrialRecord> {
        let id = &unit.entry.identity_id;
        let threshold = self.config.threshold;
        let (predicted, similarity) = match self.config.protocol {
            Protocol::Identify => self.gallery.identify(emb, threshold)?,
            Protocol::Verify => {
                let s = self.gallery.similarity_to(emb, id)?;
                ((s >= threshold).then(|| id.clone()), s)
            }
        };
        let accepted = predicted.is_some();
        let correct = predicted.as_deref() == Some(id.as_str());
        Ok(TrialRecord {
            identity_id: id.clone(),
            probe_image_id: unit.entry.probe_path.clone(),
            reference_image_id: unit.entry.reference_path.clone(),
            condition,
            spec: unit.spec.clone(),
            similarity,
            predicted_identity: predicted,
            accepted,
            correct,
            condition_key: unit.key(condition),
            error: None,
        })
    }

    fn trial(&self, unit: &TrialUnit, condition: Condition, image: &Path) -> TrialRecord {
        embed(image, &self.config.backends)
            .and_then(|emb| self.decide(unit, condition, &emb))
            .unwrap_or_else(|e| error_trial(unit, condition, &e))
    }

    fn run_unit(&self, unit: &TrialUnit) -> Vec<TrialRecord> {
        let base_cond = unit.baseline_condition();
        let dir = self
            .images_dir
            .join(path_component(&unit.entry.identity_id));
        let label = path_component(&unit.label);
        let degraded_path = dir.join(format!("{label}.degraded.png"));
        let enhanced_path = dir.join(format!("{label}.enhanced.png"));

        let prepared = std::fs::create_dir_all(&dir)
            .map_err(|e| Error::io(&dir, e))
            .and_then(|_| load_image(self.manifest.resolve(&unit.entry.probe_path)))
            .and_then(|probe| apply(&probe, &unit.spec, unit.op_seed))
            .and_then(|img| save_image(&img, &degraded_path, SaveFormat::Png));
        if let Err(e) = prepared {
            return vec![
                error_trial(unit, base_cond, &e),
                error_trial(unit, Condition::Enhanced, &e),
            ];
        }

        let baseline = self.trial(unit, base_cond, &degraded_path);
        let enhanced = match enhance(&degraded_path, &self.config.backends, &enhanced_path) {
            Ok(p) => self.trial(unit, Condition::Enhanced, &p),
            Err(e) => error_trial(unit, Condition::Enhanced, &e),
        };
        vec![baseline, enhanced]
    }
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Every record in the trials file after the run, in file order.
    pub trials: Vec<TrialRecord>,
    pub computed: usize,
    pub resumed: usize,
    pub trials_path: PathBuf,
}

impl RunOutcome {
    pub fn error_count(&self) -> usize {
        self.trials.iter().filter(|t| t.is_error()).count()
    }
}

/// Runs (or resumes) the experiment described by `config`, appending each
/// completed trial to `trials.jsonl` in plan order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let manifest = load_manifest(&config.manifest)?;
    let out_dir = &config.output_dir;
    let images_dir = out_dir.join(IMAGES_DIR);
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let units = plan_units(
        &manifest,
        &config.kinds,
        config.params_mode,
        config.master_seed,
        &config.recapture,
    )?;
    let trials_path = out_dir.join(TRIALS_FILE);
    truncate_partial_line(&trials_path)?;
    let existing = read_trials(&trials_path)?;
    let done: HashSet<String> = existing.iter().map(|t| t.condition_key.clone()).collect();
    let pending: Vec<&TrialUnit> = units
        .iter()
        .filter(|u| {
            !done.contains(&u.key(u.baseline_condition()))
                || !done.contains(&u.key(Condition::Enhanced))
        })
        .collect();
    log::info!(
        "{} units planned, {} trials on disk, {} units pending",
        units.len(),
        existing.len(),
        pending.len()
    );

    let mut computed = 0;
    if !pending.is_empty() {
        let gallery = load_or_build_gallery(&manifest, &config.backends, out_dir)?;
        let ctx = Context {
            manifest: &manifest,
            config,
            gallery: &gallery,
            images_dir,
        };
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.workers {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
        let chunk = 4 * pool.current_num_threads();

        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&trials_path)
            .map_err(|e| Error::io(&trials_path, e))?;
        for batch in pending.chunks(chunk) {
            let results: Vec<Vec<TrialRecord>> =
                pool.install(|| batch.par_iter().map(|u| ctx.run_unit(u)).collect());
            let mut buf = String::new();
            for rec in results.into_iter().flatten() {
                if done.contains(&rec.condition_key) {
                    continue;
                }
                if let Some(err) = &rec.error {
                    log::warn!("{}: {err}", rec.condition_key);
                }
                buf.push_str(
                    &serde_json::to_string(&rec).map_err(|e| Error::Format(e.to_string()))?,
                );
                buf.push('\n');
                computed += 1;
            }
            file.write_all(buf.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| Error::io(&trials_path, e))?;
        }
    }

    Ok(RunOutcome {
        trials: read_trials(&trials_path)?,
        computed,
        resumed: existing.len(),
        trials_path,
    })
}
