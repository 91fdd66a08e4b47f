//! Recognition decisions and evaluation statistics.

mod matching;
mod metrics;
mod roc;
mod stats;
mod table;

pub use matching::{cosine_similarity, identify, Embedding, Gallery};
pub use metrics::{compute_metrics, macro_f1, Confusion, Metric, MetricsSummary};
pub use roc::{roc_points, select_threshold, RocPoint};
pub use stats::{
    bootstrap_ci, cohens_d, indicator_groups, paired_bootstrap_ci, percentile, percentile_bootstrap,
};
pub use table::{per_degradation_table, DegradationTable, KindRow, Tally};

use serde::{Deserialize, Serialize};

use crate::degrade::DegradationSpec;
use crate::error::{Error, Result};

/// Trial condition. `Original` marks the undegraded control's baseline trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Degraded,
    Enhanced,
    Original,
}

impl Condition {
    /// Baseline trials are those recognised before enhancement.
    pub fn is_baseline(self) -> bool {
        matches!(self, Condition::Degraded | Condition::Original)
    }

    pub fn label(self) -> &'static str {
        match self {
            Condition::Degraded => "degraded",
            Condition::Enhanced => "enhanced",
            Condition::Original => "original",
        }
    }
}

/// One recognition attempt, as persisted to `trials.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub identity_id: String,
    pub probe_image_id: String,
    pub reference_image_id: String,
    pub condition: Condition,
    pub spec: DegradationSpec,
    pub similarity: f64,
    pub predicted_identity: Option<String>,
    pub accepted: bool,
    pub correct: bool,
    /// `identity|kind|condition`; unique within a run.
    pub condition_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// Checks `correct <=> accepted && predicted == identity`.
    pub fn check(&self) -> Result<()> {
        if self.is_error() {
            return Ok(());
        }
        let matches = self.predicted_identity.as_deref() == Some(self.identity_id.as_str());
        if self.correct != (self.accepted && matches) {
            return Err(Error::Validation(format!(
                "trial {} is marked correct={} but accepted={} predicted={:?}",
                self.condition_key, self.correct, self.accepted, self.predicted_identity
            )));
        }
        if self.accepted != self.predicted_identity.is_some() {
            return Err(Error::Validation(format!(
                "trial {}: accepted trials carry a prediction, rejected ones do not",
                self.condition_key
            )));
        }
        Ok(())
    }
}
