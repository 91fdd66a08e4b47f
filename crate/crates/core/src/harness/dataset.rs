use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// One identity with two distinct images, paths relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub identity_id: String,
    pub probe_path: String,
    pub reference_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = DatasetManifest {
            root: root.into(),
            entries,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyDataset("manifest has no entries".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.identity_id.is_empty() {
                return Err(Error::Validation("empty identity_id".into()));
            }
            if !seen.insert(e.identity_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate identity_id {}",
                    e.identity_id
                )));
            }
            if e.probe_path == e.reference_path {
                return Err(Error::Validation(format!(
                    "identity {} uses the same image {} as probe and reference",
                    e.identity_id, e.probe_path
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Reads a `identity_id,probe_path,reference_path` CSV; relative paths
    /// resolve against `root`.
    pub fn read_csv(path: &Path, root: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let expected = ["identity_id", "probe_path", "reference_path"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Validation(format!(
                "{}: manifest header must be {}, got {}",
                path.display(),
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let entries = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| csv_error(path, e))?;
        Self::new(root, entries)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file, path)
    }

    /// Writes the manifest CSV to any writer; `label` names it in errors.
    pub fn write_csv_to(&self, out: impl std::io::Write, label: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for e in &self.entries {
            writer.serialize(e).map_err(|e| csv_error(label, e))?;
        }
        writer.flush().map_err(|e| Error::io(label, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::Validation(format!("{}: {e}", path.display()))
    }
}

/// Result of [`ingest_dataset`], including identities that were skipped.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub manifest: DatasetManifest,
    pub skipped: Vec<String>,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// Builds the manifest. An explicit manifest wins; otherwise `root` is read
/// as one directory per person, the first image (lexicographic) becoming the
/// reference and the second the probe. People with fewer than two images are
/// skipped.
pub fn ingest_dataset(root: &Path, manifest: Option<&Path>) -> Result<IngestReport> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "dataset root is not a directory",
            ),
        ));
    }
    if let Some(path) = manifest {
        return Ok(IngestReport {
            manifest: DatasetManifest::read_csv(path, root)?,
            skipped: Vec::new(),
        });
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for person in sorted_children(root)?.into_iter().filter(|p| p.is_dir()) {
        let id = person
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Validation(format!("non UTF-8 directory {}", person.display())))?
            .to_string();
        let images: Vec<PathBuf> = sorted_children(&person)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        if images.len() < 2 {
            log::warn!("skipping {id}: {} image(s), need 2", images.len());
            skipped.push(id);
            continue;
        }
        let rel = |p: &Path| -> Result<String> {
            let r = p.strip_prefix(root).expect("child of root");
            r.to_str()
                .map(|s| s.replace('\\', "/"))
                .ok_or_else(|| Error::Validation(format!("non UTF-8 path {}", p.display())))
        };
        entries.push(ManifestEntry {
            reference_path: rel(&images[0])?,
            probe_path: rel(&images[1])?,
            identity_id: id,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} has no person directories with two images",
            root.display()
        )));
    }
    Ok(IngestReport {
        manifest: DatasetManifest::new(root, entries)?,
        skipped,
    })
}
