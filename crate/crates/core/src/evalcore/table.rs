use std::collections::BTreeMap;

use serde::Serialize;

use super::TrialRecord;
use crate::degrade::DegradationKind;

/// Correct-out-of-total count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindRow {
    pub kind: DegradationKind,
    pub baseline: Tally,
    pub enhanced: Tally,
    pub baseline_pct: f64,
    pub enhanced_pct: f64,
    pub gain_pp: f64,
}

/// Accuracy per degradation kind before and after enhancement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationTable {
    pub rows: Vec<KindRow>,
    /// Unweighted means over `rows`.
    pub overall_baseline_pct: f64,
    pub overall_enhanced_pct: f64,
    pub overall_gain_pp: f64,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

/// Builds the per-kind table. Kinds lacking either baseline or enhanced
/// trials are left out and reported in `warnings`. Error trials are ignored.
pub fn per_degradation_table(trials: &[TrialRecord]) -> DegradationTable {
    let mut tallies: BTreeMap<DegradationKind, (Tally, Tally)> = BTreeMap::new();
    for t in trials.iter().filter(|t| !t.is_error()) {
        let entry = tallies.entry(t.spec.kind()).or_default();
        let slot = if t.condition.is_baseline() {
            &mut entry.0
        } else {
            &mut entry.1
        };
        slot.total += 1;
        slot.correct += usize::from(t.correct);
    }

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for kind in DegradationKind::ALL {
        match tallies.get(&kind) {
            Some(&(b, e)) if b.total > 0 && e.total > 0 => {
                let (bp, ep) = (b.percent(), e.percent());
                rows.push(KindRow {
                    kind,
                    baseline: b,
                    enhanced: e,
                    baseline_pct: bp,
                    enhanced_pct: ep,
                    gain_pp: ep - bp,
                });
            }
            Some(_) => warnings.push(format!(
                "{}: missing baseline or enhanced trials; row omitted",
                kind.label()
            )),
            None => warnings.push(format!("{}: no trials; row omitted", kind.label())),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let mean = |f: fn(&KindRow) -> f64| {
        if rows.is_empty() {
            f64::NAN
        } else {
            rows.iter().map(f).sum::<f64>() / rows.len() as f64
        }
    };
    let overall_baseline_pct = mean(|r| r.baseline_pct);
    let overall_enhanced_pct = mean(|r| r.enhanced_pct);
    DegradationTable {
        overall_gain_pp: overall_enhanced_pct - overall_baseline_pct,
        overall_baseline_pct,
        overall_enhanced_pct,
        rows,
        warnings,
    }
}
