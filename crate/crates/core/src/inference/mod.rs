//! Estimators and summary statistics over a simulated or external dataset.
//!
//! Everything here is a pure function of an immutable [`Dataset`](crate::simulator::Dataset).

mod analysis;
mod ols;
mod structural;

pub use analysis::{
    assessment_regressions, ci_coverage, fosd_check, gap_stats, gap_stats_for, grid_cdf, partisan_split,
    polarization_regression, pro_anti_assessments, Category, CategoryMean, CoverageRow, FosdResult, Gap, GapCell, GapStats, Outcome,
};
pub use ols::{ols_fe_clustered, FixedEffects, Observation, OlsSpec, RegressionResult};
pub use structural::{
    estimate_structural, motive_recovery, topic_motive_summary, DroppedRow, EstimateSet,
    MotiveEstimate, MotiveRecovery, StructuralOptions, SubjectEstimate, TopicMotive,
};

use crate::normal::logit;

/// Assessment floor/ceiling used before taking logs.
pub const LOGIT_CLAMP: f64 = 0.025;

/// `logit(a)` with `a` clamped to `[0.025, 0.975]`.
///
/// On grid assessments this maps only the endpoints: 0 → logit(0.025) and
/// 1 → logit(0.975).
pub fn clamp_logit(a: f64) -> f64 {
    logit(a.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP))
}

/// Percentile with linear interpolation between order statistics
/// (position `q·(n−1)` in the sorted sample). `sorted` must be ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Clips values below the `level` and above the `1 − level` percentile
/// (linear-interpolation convention) to those percentiles.
///
/// Samples with `n · level < 1` have no observation in either tail and are
/// returned unchanged.
pub fn winsorize(values: &[f64], level: f64) -> Vec<f64> {
    if (values.len() as f64) * level < 1.0 {
        return values.to_vec();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&sorted, level);
    let hi = percentile_sorted(&sorted, 1.0 - level);
    values.iter().map(|v| v.clamp(lo, hi)).collect()
}

/// Pearson correlation; NaN when either side has no variance.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
