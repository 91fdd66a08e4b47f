use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Face identity signature produced by an embedding backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::shape("embedding must have at least one dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding values must be finite"));
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn unit(&self) -> Result<Vec<f64>> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::DegenerateInput("zero-norm embedding".into()));
        }
        Ok(self.0.iter().map(|v| v / n).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a.b / (|a| |b|)`, clamped to [-1, 1].
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!(
            "embedding dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateInput("zero-norm embedding".into()));
    }
    Ok((dot(&a.0, &b.0) / (na * nb)).clamp(-1.0, 1.0))
}

/// Enrolled reference embeddings, unit-normalised once.
#[derive(Debug, Clone)]
pub struct Gallery {
    dim: usize,
    // Sorted by identity id, which gives the lexicographic tie-break.
    entries: Vec<(String, Vec<f64>)>,
}

impl Gallery {
    pub fn new(enrolled: &BTreeMap<String, Embedding>) -> Result<Self> {
        let dim = enrolled
            .values()
            .next()
            .ok_or_else(|| Error::invalid("gallery is empty"))?
            .dim();
        let entries = enrolled
            .iter()
            .map(|(id, e)| {
                if e.dim() != dim {
                    return Err(Error::shape(format!(
                        "gallery entry {id} has dimension {}, expected {dim}",
                        e.dim()
                    )));
                }
                Ok((id.clone(), e.unit()?))
            })
            .collect::<Result<_>>()?;
        Ok(Gallery { dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Best match over the gallery: `(Some(id), sim)` when the maximum
    /// similarity reaches `threshold`, otherwise `(None, sim)`.
    pub fn identify(&self, probe: &Embedding, threshold: f64) -> Result<(Option<String>, f64)> {
        if probe.dim() != self.dim {
            return Err(Error::shape(format!(
                "probe dimension {} does not match gallery dimension {}",
                probe.dim(),
                self.dim
            )));
        }
        let p = probe.unit()?;
        let mut best: Option<(&str, f64)> = None;
        for (id, g) in &self.entries {
            let s = dot(&p, g).clamp(-1.0, 1.0);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((id, s));
            }
        }
        let (id, sim) = best.expect("gallery is non-empty");
        Ok(((sim >= threshold).then(|| id.to_string()), sim))
    }

    /// Similarity against one enrolled identity.
    pub fn similarity_to(&self, probe: &Embedding, identity: &str) -> Result<f64> {
        let p = probe.unit()?;
        let (_, g) = self
            .entries
            .iter()
            .find(|(id, _)| id == identity)
            .ok_or_else(|| Error::invalid(format!("identity {identity} is not enrolled")))?;
        Ok(dot(&p, g).clamp(-1.0, 1.0))
    }

    /// Highest similarity to any identity other than `identity`.
    pub fn best_impostor(&self, probe: &Embedding, identity: &str) -> Result<Option<f64>> {
        let p = probe.unit()?;
        Ok(self
            .entries
            .iter()
            .filter(|(id, _)| id != identity)
            .map(|(_, g)| dot(&p, g).clamp(-1.0, 1.0))
            .reduce(f64::max))
    }
}

/// Closed-set identification with rejection against `gallery`.
pub fn identify(
    probe: &Embedding,
    gallery: &BTreeMap<String, Embedding>,
    threshold: f64,
) -> Result<(Option<String>, f64)> {
    Gallery::new(gallery)?.identify(probe, threshold)
}
