use std::cmp::Ordering;

use crate::error::{Error, Result};

/// One operating point: scores `>= threshold` are accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub true_accepts: usize,
    pub false_accepts: usize,
    pub genuine_total: usize,
    pub impostor_total: usize,
}

impl RocPoint {
    pub fn youden_j(&self) -> f64 {
        self.tpr - self.fpr
    }

    // J scaled by genuine_total * impostor_total, exact in integers.
    fn scaled_j(&self) -> i128 {
        self.true_accepts as i128 * self.impostor_total as i128
            - self.false_accepts as i128 * self.genuine_total as i128
    }
}

fn count_at_least(sorted_desc: &[f64], t: f64) -> usize {
    sorted_desc.partition_point(|&s| s >= t)
}

/// ROC curve with one point per distinct observed score plus the `+inf`
/// and `-inf` sentinels; thresholds strictly decreasing.
pub fn roc_points(genuine: &[f64], impostor: &[f64]) -> Result<Vec<RocPoint>> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::invalid("ROC needs genuine and impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let desc = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (g, i) = (desc(genuine), desc(impostor));
    let mut thresholds: Vec<f64> = g.iter().chain(&i).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let point = |t: f64| {
        let ta = count_at_least(&g, t);
        let fa = count_at_least(&i, t);
        RocPoint {
            threshold: t,
            tpr: ta as f64 / g.len() as f64,
            fpr: fa as f64 / i.len() as f64,
            true_accepts: ta,
            false_accepts: fa,
            genuine_total: g.len(),
            impostor_total: i.len(),
        }
    };
    Ok(std::iter::once(f64::INFINITY)
        .chain(thresholds)
        .chain(std::iter::once(f64::NEG_INFINITY))
        .map(point)
        .collect())
}

/// Threshold maximising Youden's J; ties go to the larger threshold.
pub fn select_threshold(points: &[RocPoint]) -> Result<f64> {
    points
        .iter()
        .max_by(|a, b| {
            a.scaled_j().cmp(&b.scaled_j()).then_with(|| {
                a.threshold
                    .partial_cmp(&b.threshold)
                    .unwrap_or(Ordering::Equal)
            })
        })
        .map(|p| p.threshold)
        .ok_or_else(|| Error::invalid("no ROC points"))
}
