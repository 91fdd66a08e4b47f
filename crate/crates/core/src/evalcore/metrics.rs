use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::error::{Error, Result};

/// Confusion counts under closed-set identification with rejection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    /// Accepted with the right identity.
    pub tp: usize,
    /// Accepted with the wrong identity.
    pub fp: usize,
    /// Rejected; every probe's mate is enrolled, so these are misses.
    pub rejected: usize,
}

impl Confusion {
    pub fn from_trials<'a>(trials: impl IntoIterator<Item = &'a TrialRecord>) -> Self {
        let mut c = Confusion::default();
        for t in trials {
            c.push(t.accepted, t.correct);
        }
        c
    }

    pub fn push(&mut self, accepted: bool, correct: bool) {
        match (accepted, correct) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            // correct implies accepted; a stray flag still counts as a miss
            (false, _) => self.rejected += 1,
        }
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.rejected
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp, self.n(), 0.0)
    }

    /// 1.0 when nothing was accepted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp, 1.0)
    }

    pub fn recall(&self) -> f64 {
        // Closed set: TP + FN covers every trial.
        ratio(self.tp, self.n(), 0.0)
    }

    pub fn f1(&self) -> f64 {
        harmonic_mean(self.precision(), self.recall())
    }
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }

    pub fn of(self, c: &Confusion) -> f64 {
        match self {
            Metric::Accuracy => c.accuracy(),
            Metric::Precision => c.precision(),
            Metric::Recall => c.recall(),
            Metric::F1 => c.f1(),
        }
    }
}

/// Point estimates plus optional bootstrap bounds and effect size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Metric label to `[low, high]`.
    pub ci: BTreeMap<String, [f64; 2]>,
    pub cohens_d: Option<f64>,
}

impl MetricsSummary {
    pub fn from_confusion(c: &Confusion) -> Self {
        MetricsSummary {
            n: c.n(),
            accuracy: c.accuracy(),
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            ci: BTreeMap::new(),
            cohens_d: None,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

/// Point estimates over `trials`. Error trials must be filtered out first.
pub fn compute_metrics(trials: &[TrialRecord]) -> Result<MetricsSummary> {
    if trials.is_empty() {
        return Err(Error::invalid("no trials to score"));
    }
    Ok(MetricsSummary::from_confusion(&Confusion::from_trials(
        trials,
    )))
}

/// Unweighted mean of per-kind F1 scores.
pub fn macro_f1(trials: &[TrialRecord]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::invalid("no trials to score"));
    }
    let mut by_kind: BTreeMap<_, Confusion> = BTreeMap::new();
    for t in trials {
        by_kind
            .entry(t.spec.kind())
            .or_default()
            .push(t.accepted, t.correct);
    }
    Ok(by_kind.values().map(Confusion::f1).sum::<f64>() / by_kind.len() as f64)
}
