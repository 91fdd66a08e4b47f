use rand::RngExt;
use rayon::prelude::*;

use super::{Confusion, Metric, TrialRecord};
use crate::degrade::Seed;
use crate::error::{Error, Result};

/// Linear-interpolation percentile (`q` in [0, 1]) of ascending data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap over `n` items. `stat` receives the resampled
/// indices; iteration `i` draws from its own stream `seed.child(i)`, so the
/// result does not depend on scheduling.
pub fn percentile_bootstrap<F>(
    n: usize,
    iterations: usize,
    level: f64,
    seed: Seed,
    stat: F,
) -> Result<(f64, f64)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::invalid("cannot bootstrap an empty sample"));
    }
    if iterations < 100 {
        return Err(Error::invalid(format!(
            "bootstrap needs at least 100 iterations, got {iterations}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let mut stats: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((percentile(&stats, tail), percentile(&stats, 1.0 - tail)))
}

/// Percentile bootstrap interval of `metric` over `trials`.
pub fn bootstrap_ci(
    trials: &[TrialRecord],
    metric: Metric,
    iterations: usize,
    level: f64,
    seed: Seed,
) -> Result<(f64, f64)> {
    percentile_bootstrap(trials.len(), iterations, level, seed, |idx| {
        metric.of(&Confusion::from_trials(idx.iter().map(|&i| &trials[i])))
    })
}

/// Interval for `metric(after) - metric(before)` resampling matched pairs.
pub fn paired_bootstrap_ci(
    before: &[TrialRecord],
    after: &[TrialRecord],
    metric: Metric,
    iterations: usize,
    level: f64,
    seed: Seed,
) -> Result<(f64, f64)> {
    if before.len() != after.len() {
        return Err(Error::shape(format!(
            "paired bootstrap needs matched samples, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    percentile_bootstrap(before.len(), iterations, level, seed, |idx| {
        let a = Confusion::from_trials(idx.iter().map(|&i| &after[i]));
        let b = Confusion::from_trials(idx.iter().map(|&i| &before[i]));
        metric.of(&a) - metric.of(&b)
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standardised mean difference with the pooled sample standard deviation.
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(Error::invalid("each group needs at least two observations"));
    }
    let (ma, va) = mean_var(group_a);
    let (mb, vb) = mean_var(group_b);
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if pooled.is_nan() || pooled <= 0.0 {
        return Err(Error::DegenerateInput("pooled variance is zero".into()));
    }
    Ok((ma - mb) / pooled.sqrt())
}

/// Per-trial 0/1 indicators whose mean is `metric`: correctness over all
/// trials for accuracy and recall, over accepted trials for precision.
/// F1 has no per-trial decomposition.
pub fn indicator_groups(trials: &[TrialRecord], metric: Metric) -> Option<Vec<f64>> {
    let ind = |t: &TrialRecord| if t.correct { 1.0 } else { 0.0 };
    match metric {
        Metric::Accuracy | Metric::Recall => Some(trials.iter().map(ind).collect()),
        Metric::Precision => Some(trials.iter().filter(|t| t.accepted).map(ind).collect()),
        Metric::F1 => None,
    }
}
