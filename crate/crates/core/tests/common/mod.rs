//! Shared builders for the integration tests.
#![allow(dead_code)]

use fdb_core::degrade::{sweep_specs, DegradationKind, RecaptureParams};
use fdb_core::evalcore::{Condition, TrialRecord};

/// Reference per-kind accuracies as correct-of-21 counts, in report order:
/// (baseline, enhanced).
pub const KIND_COUNTS: [(usize, usize); 8] = [
    (21, 21),
    (18, 21),
    (7, 20),
    (2, 18),
    (2, 17),
    (1, 19),
    (1, 11),
    (0, 15),
];

/// Reference percentages in the same order: (baseline, enhanced, gain).
pub const KIND_PERCENTS: [(f64, f64, f64); 8] = [
    (100.0, 100.0, 0.0),
    (85.7, 100.0, 14.3),
    (33.3, 95.2, 61.9),
    (9.5, 85.7, 76.2),
    (9.5, 81.0, 71.5),
    (4.8, 90.5, 85.7),
    (4.8, 52.4, 47.6),
    (0.0, 71.4, 71.4),
];

pub fn trial(
    identity: &str,
    kind: DegradationKind,
    condition: Condition,
    accepted: bool,
    correct: bool,
) -> TrialRecord {
    let spec = sweep_specs(kind, &RecaptureParams::default()).remove(0);
    TrialRecord {
        identity_id: identity.to_string(),
        probe_image_id: format!("{identity}/probe.png"),
        reference_image_id: format!("{identity}/ref.png"),
        condition,
        spec,
        similarity: if correct { 0.9 } else { 0.5 },
        predicted_identity: accepted.then(|| {
            if correct {
                identity.to_string()
            } else {
                "someone_else".to_string()
            }
        }),
        accepted,
        correct,
        condition_key: format!("{identity}|{}|{}", kind.label(), condition.label()),
        error: None,
    }
}

/// 21 identities per kind whose correct counts reproduce the reference table.
/// Wrong decisions are rejections.
pub fn kind_table_trials() -> Vec<TrialRecord> {
    let mut out = Vec::new();
    for (kind, &(base, enh)) in DegradationKind::ALL.iter().zip(&KIND_COUNTS) {
        let base_cond = if *kind == DegradationKind::None {
            Condition::Original
        } else {
            Condition::Degraded
        };
        for i in 0..21 {
            let id = format!("id{i:02}");
            out.push(trial(&id, *kind, base_cond, i < base, i < base));
            out.push(trial(&id, *kind, Condition::Enhanced, i < enh, i < enh));
        }
    }
    out
}
