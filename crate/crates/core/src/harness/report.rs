use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::experiment::read_trials;
use crate::degrade::Seed;
use crate::error::{Error, Result};
use crate::evalcore::{
    bootstrap_ci, cohens_d, compute_metrics, indicator_groups, macro_f1, paired_bootstrap_ci,
    per_degradation_table, DegradationTable, Metric, MetricsSummary, TrialRecord,
};

pub const REPORT_FILES: [&str; 5] = [
    "report.md",
    "table1.csv",
    "table2.csv",
    "plotdata.csv",
    "metrics.json",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub iterations: usize,
    pub level: f64,
    pub seed: Seed,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            iterations: 1000,
            level: 0.95,
            seed: Seed(0x5EED),
        }
    }
}

/// One condition row of the overall summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub metrics: MetricsSummary,
    pub macro_f1: f64,
}

/// Enhanced minus baseline, with a paired bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub delta: f64,
    pub ci: Option<[f64; 2]>,
    pub cohens_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub total_trials: usize,
    pub error_trials: usize,
    pub baseline: Option<ConditionSummary>,
    pub enhanced: Option<ConditionSummary>,
    /// Keyed by metric label.
    pub improvement: BTreeMap<String, Improvement>,
    /// Pooled-trial baseline accuracy, for comparison with the unweighted
    /// per-kind average.
    pub pooled_baseline_accuracy: Option<f64>,
    pub by_kind: DegradationTable,
    pub notes: Vec<String>,
}

fn summarize(trials: &[&TrialRecord], opts: &ReportOptions) -> Result<Option<ConditionSummary>> {
    if trials.is_empty() {
        return Ok(None);
    }
    let owned: Vec<TrialRecord> = trials.iter().map(|t| (*t).clone()).collect();
    let mut metrics = compute_metrics(&owned)?;
    for (i, m) in Metric::ALL.into_iter().enumerate() {
        let (lo, hi) = bootstrap_ci(
            &owned,
            m,
            opts.iterations,
            opts.level,
            opts.seed.child(i as u64),
        )?;
        metrics.ci.insert(m.label().to_string(), [lo, hi]);
    }
    Ok(Some(ConditionSummary {
        macro_f1: macro_f1(&owned)?,
        metrics,
    }))
}

fn pair_key(t: &TrialRecord) -> &str {
    t.condition_key
        .rsplit_once('|')
        .map_or(&t.condition_key, |(k, _)| k)
}

/// Computes every reported figure from `trials`, which are first sorted by
/// key so the result does not depend on file order.
pub fn build_report(trials: &[TrialRecord], opts: &ReportOptions) -> Result<Report> {
    if trials.is_empty() {
        return Err(Error::EmptyDataset("no trials to report".into()));
    }
    let mut sorted: Vec<&TrialRecord> = trials.iter().collect();
    sorted.sort_by(|a, b| a.condition_key.cmp(&b.condition_key));
    let valid: Vec<&TrialRecord> = sorted.iter().copied().filter(|t| !t.is_error()).collect();
    let error_trials = sorted.len() - valid.len();
    if valid.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "all {error_trials} trials are error trials"
        )));
    }
    let (base, enh): (Vec<&TrialRecord>, Vec<&TrialRecord>) = valid
        .iter()
        .copied()
        .partition(|t| t.condition.is_baseline());

    let baseline = summarize(&base, opts)?;
    let mut enhanced = summarize(&enh, opts)?;

    let owned_base: Vec<TrialRecord> = base.iter().map(|t| (*t).clone()).collect();
    let owned_enh: Vec<TrialRecord> = enh.iter().map(|t| (*t).clone()).collect();
    let by_key: BTreeMap<&str, &TrialRecord> =
        owned_base.iter().map(|t| (pair_key(t), t)).collect();
    let (paired_b, paired_e): (Vec<TrialRecord>, Vec<TrialRecord>) = owned_enh
        .iter()
        .filter_map(|e| by_key.get(pair_key(e)).map(|b| ((*b).clone(), e.clone())))
        .unzip();

    let mut improvement = BTreeMap::new();
    if let (Some(b), Some(e)) = (&baseline, &enhanced) {
        for (i, m) in Metric::ALL.into_iter().enumerate() {
            let ci = if paired_b.is_empty() {
                None
            } else {
                let seed = opts.seed.child(100 + i as u64);
                let (lo, hi) = paired_bootstrap_ci(
                    &paired_b,
                    &paired_e,
                    m,
                    opts.iterations,
                    opts.level,
                    seed,
                )?;
                Some([lo, hi])
            };
            let d = match (
                indicator_groups(&owned_enh, m),
                indicator_groups(&owned_base, m),
            ) {
                (Some(ge), Some(gb)) => cohens_d(&ge, &gb).ok(),
                _ => None,
            };
            improvement.insert(
                m.label().to_string(),
                Improvement {
                    delta: e.metrics.get(m) - b.metrics.get(m),
                    ci,
                    cohens_d: d,
                },
            );
        }
    }
    if let Some(e) = enhanced.as_mut() {
        e.metrics.cohens_d = improvement
            .get(Metric::Accuracy.label())
            .and_then(|i| i.cohens_d);
    }

    let owned_valid: Vec<TrialRecord> = valid.iter().map(|t| (*t).clone()).collect();
    let by_kind = per_degradation_table(&owned_valid);
    let pooled_baseline_accuracy = baseline.as_ref().map(|b| b.metrics.accuracy);

    let mut notes = vec![
        "Gallery references are kept pristine; only probe images are degraded and enhanced."
            .to_string(),
    ];
    if let (Some(pooled), false) = (pooled_baseline_accuracy, by_kind.rows.is_empty()) {
        notes.push(format!(
            "Overall averages in the per-degradation table are unweighted means of the rows \
             (baseline {:.2}%, enhanced {:.2}%), recomputed from trial counts. The pooled \
             baseline accuracy over all baseline trials is {:.2}%. The two coincide only when \
             every row has the same number of trials.",
            by_kind.overall_baseline_pct,
            by_kind.overall_enhanced_pct,
            100.0 * pooled
        ));
    }
    for (name, s) in [("baseline", &baseline), ("enhanced", &enhanced)] {
        if let Some(s) = s {
            notes.push(format!(
                "{name} F1: micro {:.3} (harmonic mean of pooled precision {:.3} and recall {:.3}), \
                 macro {:.3} (mean of per-degradation F1).",
                s.metrics.f1, s.metrics.precision, s.metrics.recall, s.macro_f1
            ));
        }
    }
    notes.push(format!(
        "{error_trials} of {} trials failed in a backend and are excluded from every figure.",
        sorted.len()
    ));
    notes.extend(by_kind.warnings.iter().cloned());

    Ok(Report {
        total_trials: sorted.len(),
        error_trials,
        baseline,
        enhanced,
        improvement,
        pooled_baseline_accuracy,
        by_kind,
        notes,
    })
}

fn fmt_ci(ci: Option<&[f64; 2]>, scale: f64, prec: usize) -> String {
    ci.map_or_else(
        || "n/a".to_string(),
        |[lo, hi]| format!("[{:.prec$}, {:.prec$}]", lo * scale, hi * scale),
    )
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}

impl Report {
    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Face recognition under degradation\n");
        let _ = writeln!(
            md,
            "{} trials, {} error trials excluded. Gallery references are pristine.\n",
            self.total_trials, self.error_trials
        );

        let _ = writeln!(md, "## Overall recognition performance\n");
        let _ = writeln!(
            md,
            "| Condition | n | Accuracy (%) | Precision | Recall | F1 | Macro F1 | Accuracy 95% CI |"
        );
        let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|---:|---|");
        for (name, s) in [("Degraded", &self.baseline), ("Enhanced", &self.enhanced)] {
            if let Some(s) = s {
                let m = &s.metrics;
                let _ = writeln!(
                    md,
                    "| {name} | {} | {:.1} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
                    m.n,
                    100.0 * m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    s.macro_f1,
                    fmt_ci(m.ci.get(Metric::Accuracy.label()), 100.0, 1)
                );
            }
        }
        if !self.improvement.is_empty() {
            let _ = writeln!(md, "\n| Improvement | Delta | Paired 95% CI | Cohen's d |");
            let _ = writeln!(md, "|---|---:|---|---:|");
            for m in Metric::ALL {
                let imp = &self.improvement[m.label()];
                let _ = writeln!(
                    md,
                    "| {} | {:+.3} | {} | {} |",
                    m.label(),
                    imp.delta,
                    fmt_ci(imp.ci.as_ref(), 1.0, 3),
                    opt(imp.cohens_d, 2)
                );
            }
        }

        let t = &self.by_kind;
        let _ = writeln!(md, "\n## Enhancement effects by degradation type\n");
        let _ = writeln!(
            md,
            "| Degradation | Baseline (%) | Enhanced (%) | Gain (pp) |"
        );
        let _ = writeln!(md, "|---|---:|---:|---:|");
        for r in &t.rows {
            let _ = writeln!(
                md,
                "| {} | {:.1} | {:.1} | {:+.1} |",
                r.kind.display_name(),
                r.baseline_pct,
                r.enhanced_pct,
                r.gain_pp
            );
        }
        if !t.rows.is_empty() {
            let _ = writeln!(
                md,
                "| Overall Average | {:.1} | {:.1} | {:+.1} |",
                t.overall_baseline_pct, t.overall_enhanced_pct, t.overall_gain_pp
            );
        }

        let _ = writeln!(md, "\n## Notes\n");
        for n in &self.notes {
            let _ = writeln!(md, "- {n}");
        }
        md
    }

    pub fn table1_csv(&self) -> String {
        let mut out = String::from(
            "condition,n,accuracy,precision,recall,f1,macro_f1,accuracy_lo,accuracy_hi,\
             precision_lo,precision_hi,recall_lo,recall_hi,f1_lo,f1_hi,cohens_d\n",
        );
        for (name, s) in [("degraded", &self.baseline), ("enhanced", &self.enhanced)] {
            let Some(s) = s else { continue };
            let m = &s.metrics;
            let _ = write!(
                out,
                "{name},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                m.n, m.accuracy, m.precision, m.recall, m.f1, s.macro_f1
            );
            for metric in Metric::ALL {
                match m.ci.get(metric.label()) {
                    Some([lo, hi]) => {
                        let _ = write!(out, ",{lo:.6},{hi:.6}");
                    }
                    None => out.push_str(",,"),
                }
            }
            let _ = writeln!(
                out,
                ",{}",
                m.cohens_d.map_or(String::new(), |d| format!("{d:.6}"))
            );
        }
        out
    }

    pub fn by_kind_csv(&self) -> String {
        let mut out = String::from(
            "kind,degradation,baseline_correct,baseline_total,baseline_pct,\
             enhanced_correct,enhanced_total,enhanced_pct,gain_pp\n",
        );
        for r in &self.by_kind.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.4},{},{},{:.4},{:.4}",
                r.kind.label(),
                r.kind.display_name(),
                r.baseline.correct,
                r.baseline.total,
                r.baseline_pct,
                r.enhanced.correct,
                r.enhanced.total,
                r.enhanced_pct,
                r.gain_pp
            );
        }
        if !self.by_kind.rows.is_empty() {
            let t = &self.by_kind;
            let _ = writeln!(
                out,
                "overall,Overall Average,,,{:.4},,,{:.4},{:.4}",
                t.overall_baseline_pct, t.overall_enhanced_pct, t.overall_gain_pp
            );
        }
        out
    }

    pub fn plotdata_csv(&self) -> String {
        let mut out = String::from("kind,baseline_pct,enhanced_pct,gain_pp\n");
        for r in &self.by_kind.rows {
            let _ = writeln!(
                out,
                "{},{:.4},{:.4},{:.4}",
                r.kind.label(),
                r.baseline_pct,
                r.enhanced_pct,
                r.gain_pp
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes every file in [`REPORT_FILES`] into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let contents = [
            self.to_markdown(),
            self.table1_csv(),
            self.by_kind_csv(),
            self.plotdata_csv(),
            self.to_json()? + "\n",
        ];
        for (name, body) in REPORT_FILES.iter().zip(contents) {
            let p = out_dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Reads a trials file and writes the report files into `out_dir`.
pub fn write_report(trials_path: &Path, out_dir: &Path, opts: &ReportOptions) -> Result<Report> {
    let trials = read_trials(trials_path)?;
    let report = build_report(&trials, opts)?;
    report.write(out_dir)?;
    Ok(report)
}

/// Reads a `label,score` CSV into (genuine, impostor) score lists. Labels
/// are `1`/`genuine`/`true` or `0`/`impostor`/`false`.
pub fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["label", "score"] {
        return Err(Error::Validation(format!(
            "{}: expected header label,score",
            path.display()
        )));
    }
    let (mut genuine, mut impostor) = (Vec::new(), Vec::new());
    for (n, row) in reader.records().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| Error::Validation(format!("{}:{line}: {e}", path.display())))?;
        let score: f64 = row[1]
            .parse()
            .map_err(|e| Error::Validation(format!("{}:{line}: score: {e}", path.display())))?;
        match row[0].to_ascii_lowercase().as_str() {
            "1" | "genuine" | "true" => genuine.push(score),
            "0" | "impostor" | "false" => impostor.push(score),
            other => {
                return Err(Error::Validation(format!(
                    "{}:{line}: unknown label {other:?}",
                    path.display()
                )))
            }
        }
    }
    Ok((genuine, impostor))
}
