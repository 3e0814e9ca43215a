//! Least squares with absorbed fixed effects and subject-clustered errors.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One regression row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub subject: u32,
    pub topic: String,
    pub round: u8,
    pub y: f64,
    /// Values of the named regressors, in [`OlsSpec::regressors`] order.
    pub x: Vec<f64>,
    /// Values of the unreported controls, in [`OlsSpec::controls`] order.
    pub controls: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FixedEffects {
    pub subject: bool,
    pub topic: bool,
    pub round: bool,
}

impl FixedEffects {
    pub const ALL: FixedEffects = FixedEffects { subject: true, topic: true, round: true };
    pub const SUBJECT: FixedEffects = FixedEffects { subject: true, topic: false, round: false };
    pub const NONE: FixedEffects = FixedEffects { subject: false, topic: false, round: false };
}

/// Model description. Errors are always clustered by subject.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSpec {
    pub outcome: String,
    pub regressors: Vec<String>,
    /// Extra columns that are estimated but not reported; like fixed-effect
    /// dummies, collinear ones are dropped instead of raising an error.
    pub controls: Vec<String>,
    pub fixed_effects: FixedEffects,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub outcome: String,
    /// Named regressors, preceded by `(intercept)` when there is no subject FE.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub n: usize,
    pub clusters: usize,
    /// Number of estimated columns: regressors, controls and topic/round dummies, not absorbed subject effects.
    pub k: usize,
    /// Controls and fixed-effect dummies dropped as collinear.
    pub dropped: Vec<String>,
}

impl RegressionResult {
    fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coef(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.coefficients[i])
    }

    pub fn se(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.std_errors[i])
    }

    pub fn t(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.t_stats[i])
    }
}

pub const INTERCEPT: &str = "(intercept)";

/// Relative residual norm below which a column counts as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

struct Column {
    name: String,
    named: bool,
    values: Vec<f64>,
}

/// Group means computed as `first + Σ(x − first)/n`, so a constant group has
/// mean equal to that constant and demeans to exactly zero.
fn demean(values: &mut [f64], groups: &[usize], n_groups: usize) {
    let mut first = vec![f64::NAN; n_groups];
    let mut sum = vec![0.0; n_groups];
    let mut count = vec![0usize; n_groups];
    for (v, &g) in values.iter().zip(groups) {
        if count[g] == 0 {
            first[g] = *v;
        }
        sum[g] += v - first[g];
        count[g] += 1;
    }
    for (v, &g) in values.iter_mut().zip(groups) {
        *v -= first[g] + sum[g] / count[g] as f64;
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// OLS of `y` on the named regressors plus fixed effects.
///
/// Subject effects are removed by the within transform; topic and round
/// effects enter as dummy columns, and dummies that are collinear with earlier
/// columns are dropped. The fit uses a QR decomposition; the covariance is
/// CR1, clustered by subject, with factor `(C/(C−1))·((n−1)/(n−k))` where `k`
/// counts estimated columns.
pub fn ols_fe_clustered(obs: &[Observation], spec: &OlsSpec) -> Result<RegressionResult> {
    let n = obs.len();
    let p = spec.regressors.len();
    if n == 0 {
        return Err(Error::Estimation(format!("{}: no observations", spec.outcome)));
    }
    let pc = spec.controls.len();
    if let Some(o) = obs.iter().find(|o| o.x.len() != p || o.controls.len() != pc) {
        return Err(Error::Estimation(format!(
            "{}: observation for subject {} has {}+{} columns, expected {p}+{pc}",
            spec.outcome,
            o.subject,
            o.x.len(),
            o.controls.len()
        )));
    }
    let fe = spec.fixed_effects;

    let mut columns = Vec::new();
    if !fe.subject {
        columns.push(Column { name: INTERCEPT.into(), named: true, values: vec![1.0; n] });
    }
    for (j, name) in spec.regressors.iter().enumerate() {
        columns.push(Column { name: name.clone(), named: true, values: obs.iter().map(|o| o.x[j]).collect() });
    }
    for (j, name) in spec.controls.iter().enumerate() {
        columns.push(Column { name: name.clone(), named: false, values: obs.iter().map(|o| o.controls[j]).collect() });
    }
    if fe.topic {
        let topics: BTreeSet<&str> = obs.iter().map(|o| o.topic.as_str()).collect();
        for t in topics {
            columns.push(Column {
                name: format!("topic[{t}]"),
                named: false,
                values: obs.iter().map(|o| f64::from(u8::from(o.topic == t))).collect(),
            });
        }
    }
    if fe.round {
        let rounds: BTreeSet<u8> = obs.iter().map(|o| o.round).collect();
        for r in rounds {
            columns.push(Column {
                name: format!("round[{r}]"),
                named: false,
                values: obs.iter().map(|o| f64::from(u8::from(o.round == r))).collect(),
            });
        }
    }

    let mut cluster_ids: BTreeMap<u32, usize> = BTreeMap::new();
    for o in obs {
        let next = cluster_ids.len();
        cluster_ids.entry(o.subject).or_insert(next);
    }
    let groups: Vec<usize> = obs.iter().map(|o| cluster_ids[&o.subject]).collect();
    let n_clusters = cluster_ids.len();

    let mut y: Vec<f64> = obs.iter().map(|o| o.y).collect();
    let raw_norms: Vec<f64> = columns.iter().map(|c| norm(&c.values)).collect();
    if fe.subject {
        demean(&mut y, &groups, n_clusters);
        for c in &mut columns {
            demean(&mut c.values, &groups, n_clusters);
        }
    }

    // Greedy modified Gram–Schmidt to find collinear columns in order.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut collinear = Vec::new();
    let mut dropped = Vec::new();
    for (c, raw) in columns.iter().zip(&raw_norms) {
        let mut r = c.values.clone();
        for q in &basis {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= dot * qi;
            }
        }
        let rn = norm(&r);
        if rn <= COLLINEAR_TOL * raw.max(f64::MIN_POSITIVE) || rn == 0.0 {
            if c.named {
                collinear.push(c.name.clone());
            } else {
                dropped.push(c.name.clone());
            }
            continue;
        }
        basis.push(r.into_iter().map(|v| v / rn).collect());
        kept.push(c);
    }
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    let k = kept.len();
    if k == 0 {
        return Err(Error::Estimation(format!("{}: no estimable columns", spec.outcome)));
    }
    if n <= k || n_clusters < 2 {
        return Err(Error::Estimation(format!(
            "{}: need n > k and at least two clusters (n={n}, k={k}, clusters={n_clusters})",
            spec.outcome
        )));
    }
    let x = DMatrix::from_fn(n, k, |i, j| kept[j].values[i]);
    let yv = DVector::from_vec(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Estimation(format!("{}: singular triangular factor", spec.outcome)))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Estimation(format!("{}: singular triangular factor", spec.outcome)))?;
    let bread = &r_inv * r_inv.transpose();
    let resid = &yv - &x * &beta;

    let mut scores = DMatrix::zeros(n_clusters, k);
    for i in 0..n {
        for j in 0..k {
            scores[(groups[i], j)] += x[(i, j)] * resid[i];
        }
    }
    let meat = scores.transpose() * &scores;
    let c = n_clusters as f64;
    let factor = (c / (c - 1.0)) * ((n as f64 - 1.0) / (n - k) as f64);
    let cov = (&bread * meat * &bread) * factor;

    let mut terms = Vec::new();
    let mut coefficients = Vec::new();
    let mut std_errors = Vec::new();
    let mut t_stats = Vec::new();
    for (j, col) in kept.iter().enumerate() {
        if !col.named {
            continue;
        }
        let b = beta[j];
        let se = cov[(j, j)].max(0.0).sqrt();
        terms.push(col.name.clone());
        coefficients.push(b);
        std_errors.push(se);
        t_stats.push(if se > 0.0 { b / se } else if b == 0.0 { 0.0 } else { b.signum() * f64::INFINITY });
    }
    Ok(RegressionResult {
        outcome: spec.outcome.clone(),
        terms,
        coefficients,
        std_errors,
        t_stats,
        n,
        clusters: n_clusters,
        k,
        dropped,
    })
}
