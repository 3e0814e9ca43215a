//! Reduced-form analyses: assessment gaps, stochastic dominance, CI coverage
//! and the follow-message regressions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clamp_logit;
use super::ols::{ols_fe_clustered, FixedEffects, Observation, OlsSpec, RegressionResult};
use crate::error::Result;
use crate::protocol::{grid_index, grid_value, round_to_grid, RoundRecord, SourceKind, TopicClass, GRID_POINTS};
use crate::simulator::Dataset;

/// Dependent-variable transform for assessment analyses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Level,
    /// `clamp_logit(a)`.
    Logit,
}

impl Outcome {
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Outcome::Level => a,
            Outcome::Logit => clamp_logit(a),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Level => "assessment",
            Outcome::Logit => "logit_assessment",
        }
    }
}

/// News direction relative to the subject's motive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    ProParty,
    AntiParty,
    Neutral,
}

impl Category {
    pub fn of(r: &RoundRecord) -> Option<Category> {
        if r.topic_class == TopicClass::Neutral {
            return Some(Category::Neutral);
        }
        r.pro_party.map(|p| if p { Category::ProParty } else { Category::AntiParty })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ProParty => "pro_party",
            Category::AntiParty => "anti_party",
            Category::Neutral => "neutral",
        }
    }
}

/// Mean of `values` with a subject-clustered standard error.
fn clustered_mean(values: &[(u32, f64)]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().map(|v| v.1).sum::<f64>() / n as f64;
    let mut sums: BTreeMap<u32, f64> = BTreeMap::new();
    for (s, v) in values {
        *sums.entry(*s).or_default() += v - mean;
    }
    let c = sums.len() as f64;
    if c < 2.0 {
        return (mean, f64::NAN);
    }
    let ss: f64 = sums.values().map(|s| s * s).sum();
    (mean, (ss * c / (c - 1.0)).sqrt() / n as f64)
}

/// Partisan flag per subject: partisanship strictly above the cohort median.
pub fn partisan_split(data: &Dataset) -> BTreeMap<u32, bool> {
    if data.subjects.is_empty() {
        return BTreeMap::new();
    }
    let mut p: Vec<f64> = data.subjects.iter().map(|s| s.partisanship).collect();
    p.sort_by(f64::total_cmp);
    let median = super::percentile_sorted(&p, 0.5);
    data.subjects.iter().map(|s| (s.id, s.partisanship > median)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCell {
    pub category: Category,
    pub source: SourceKind,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

/// A difference in means estimated by OLS with clustered errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub n: usize,
    pub clusters: usize,
}

impl Gap {
    fn from_regression(res: &RegressionResult, term: &str) -> Option<Gap> {
        Some(Gap {
            estimate: res.coef(term)?,
            se: res.se(term)?,
            t: res.t(term)?,
            n: res.n,
            clusters: res.clusters,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMean {
    pub category: Category,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    /// Subject-demeaned mean assessment by category × source.
    pub cells: Vec<GapCell>,
    /// Subject-demeaned mean by category, pooled over sources.
    pub category_means: Vec<CategoryMean>,
    pub demeaned_pro_minus_anti: f64,
    pub demeaned_fake_minus_true_politicized: f64,
    pub demeaned_fake_minus_true_neutral: f64,
    /// Raw Pro − Anti gap.
    pub pro_anti: Option<Gap>,
    /// Raw Fake − True gap on Pro/Anti-Party news.
    pub fake_true_politicized: Option<Gap>,
    /// Raw Fake − True gap on neutral topics.
    pub fake_true_neutral: Option<Gap>,
}

impl GapStats {
    pub fn cell(&self, category: Category, source: SourceKind) -> Option<&GapCell> {
        self.cells.iter().find(|c| c.category == category && c.source == source)
    }

    pub fn category_mean(&self, category: Category) -> f64 {
        self.category_means.iter().find(|c| c.category == category).map_or(f64::NAN, |c| c.mean)
    }
}

struct Demeaned<'a> {
    row: &'a RoundRecord,
    category: Category,
    value: f64,
}

/// Rows in the gap sample with the subject mean subtracted.
fn demeaned_rows<'a>(rows: impl Iterator<Item = &'a RoundRecord>, outcome: Outcome) -> Vec<Demeaned<'a>> {
    let sample: Vec<(&RoundRecord, Category, f64)> = rows
        .filter(|r| r.message_seen())
        .filter_map(|r| Some((r, Category::of(r)?, outcome.apply(r.assessment?))))
        .collect();
    // Shifted sums so a subject with constant assessments demeans to exactly 0.
    let mut sums: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for (r, _, v) in &sample {
        let e = sums.entry(r.agent_id).or_insert((*v, 0.0, 0));
        e.1 += v - e.0;
        e.2 += 1;
    }
    sample
        .into_iter()
        .map(|(row, category, v)| {
            let (first, s, n) = sums[&row.agent_id];
            Demeaned { row, category, value: v - (first + s / n as f64) }
        })
        .collect()
}

fn mean_where(rows: &[Demeaned], pred: impl Fn(&Demeaned) -> bool) -> f64 {
    let xs: Vec<f64> = rows.iter().filter(|d| pred(d)).map(|d| d.value).collect();
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn observation(r: &RoundRecord, y: f64, x: Vec<f64>) -> Observation {
    Observation { subject: r.agent_id, topic: r.topic_id.clone(), round: r.round, y, x, controls: Vec::new() }
}

fn simple_gap(rows: &[&RoundRecord], outcome: Outcome, term: &str, x: impl Fn(&RoundRecord) -> bool) -> Result<Option<Gap>> {
    let obs: Vec<Observation> = rows
        .iter()
        .map(|r| observation(r, outcome.apply(r.assessment.unwrap_or(f64::NAN)), vec![f64::from(u8::from(x(r)))]))
        .collect();
    let n_treated = obs.iter().filter(|o| o.x[0] == 1.0).count();
    if n_treated == 0 || n_treated == obs.len() {
        return Ok(None);
    }
    let spec = OlsSpec {
        outcome: outcome.as_str().into(),
        regressors: vec![term.into()],
        controls: vec![],
        fixed_effects: FixedEffects::NONE,
    };
    match ols_fe_clustered(&obs, &spec) {
        Ok(res) => Ok(Gap::from_regression(&res, term)),
        Err(crate::Error::Estimation(msg)) => {
            log::warn!("{term} gap not estimable: {msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Subject-demeaned assessment cells and raw gaps.
pub fn gap_stats(data: &Dataset, outcome: Outcome) -> Result<GapStats> {
    gap_stats_for(data.rounds.iter(), outcome)
}

/// [`gap_stats`] over an arbitrary subset of rounds.
pub fn gap_stats_for<'a>(rows: impl Iterator<Item = &'a RoundRecord>, outcome: Outcome) -> Result<GapStats> {
    let dm = demeaned_rows(rows, outcome);
    let mut cells = Vec::new();
    let mut category_means = Vec::new();
    for category in [Category::ProParty, Category::AntiParty, Category::Neutral] {
        let pooled: Vec<(u32, f64)> =
            dm.iter().filter(|d| d.category == category).map(|d| (d.row.agent_id, d.value)).collect();
        let (mean, se) = clustered_mean(&pooled);
        category_means.push(CategoryMean { category, n: pooled.len(), mean, se });
        for source in [SourceKind::TrueNews, SourceKind::FakeNews] {
            let values: Vec<(u32, f64)> = dm
                .iter()
                .filter(|d| d.category == category && d.row.source == Some(source))
                .map(|d| (d.row.agent_id, d.value))
                .collect();
            let (mean, se) = clustered_mean(&values);
            cells.push(GapCell { category, source, n: values.len(), mean, se });
        }
    }
    let politicized = |d: &Demeaned| d.category != Category::Neutral;
    let fake = |d: &Demeaned| d.row.source == Some(SourceKind::FakeNews);

    let seen: Vec<&RoundRecord> = dm.iter().map(|d| d.row).collect();
    let pro_anti_rows: Vec<&RoundRecord> = seen.iter().copied().filter(|r| r.pro_party.is_some()).collect();
    let neutral_rows: Vec<&RoundRecord> =
        seen.iter().copied().filter(|r| r.topic_class == TopicClass::Neutral).collect();
    let is_fake = |r: &RoundRecord| r.source == Some(SourceKind::FakeNews);

    Ok(GapStats {
        demeaned_pro_minus_anti: mean_where(&dm, |d| d.category == Category::ProParty)
            - mean_where(&dm, |d| d.category == Category::AntiParty),
        demeaned_fake_minus_true_politicized: mean_where(&dm, |d| politicized(d) && fake(d))
            - mean_where(&dm, |d| politicized(d) && !fake(d)),
        demeaned_fake_minus_true_neutral: mean_where(&dm, |d| !politicized(d) && fake(d))
            - mean_where(&dm, |d| !politicized(d) && !fake(d)),
        cells,
        category_means,
        pro_anti: simple_gap(&pro_anti_rows, outcome, "pro_party", |r| r.pro_party == Some(true))?,
        fake_true_politicized: simple_gap(&pro_anti_rows, outcome, "fake_news", is_fake)?,
        fake_true_neutral: simple_gap(&neutral_rows, outcome, "fake_news", is_fake)?,
    })
}

/// Empirical-CDF comparison on the assessment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FosdResult {
    /// `CDF_A ≤ CDF_B` at every grid point.
    pub a_dominates: bool,
    /// `max(CDF_A − CDF_B)` over the grid, floored at 0.
    pub max_violation: f64,
    pub cdf_a: Vec<f64>,
    pub cdf_b: Vec<f64>,
}

/// Empirical CDF of `sample` at the 11 grid points.
pub fn grid_cdf(sample: &[f64]) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|k| {
            let g = grid_value(k);
            sample.iter().filter(|a| **a <= g + 1e-12).count() as f64 / sample.len() as f64
        })
        .collect()
}

/// Does sample `a` first-order stochastically dominate sample `b`?
pub fn fosd_check(a: &[f64], b: &[f64]) -> FosdResult {
    let cdf_a = grid_cdf(a);
    let cdf_b = grid_cdf(b);
    let max_violation = cdf_a.iter().zip(&cdf_b).map(|(x, y)| x - y).fold(0.0, f64::max);
    FosdResult { a_dominates: max_violation <= 1e-12, max_violation, cdf_a, cdf_b }
}

/// Assessments of seen Pro-Party and Anti-Party news.
pub fn pro_anti_assessments(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let mut pro = Vec::new();
    let mut anti = Vec::new();
    for r in data.rounds.iter().filter(|r| r.message_seen()) {
        match (r.pro_party, r.assessment) {
            (Some(true), Some(a)) => pro.push(a),
            (Some(false), Some(a)) => anti.push(a),
            _ => {}
        }
    }
    (pro, anti)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    /// A topic class name, or `topic:<id>`.
    pub partition: String,
    /// `all`, `partisan` or `moderate`.
    pub group: String,
    pub n: usize,
    pub rate: f64,
    pub se: f64,
}

/// Share of rounds whose bounds contain the answer, by topic class and by
/// topic, for all subjects and split into partisans and moderates.
pub fn ci_coverage(data: &Dataset) -> Vec<CoverageRow> {
    let partisan = partisan_split(data);
    let mut groups: BTreeMap<(String, &str), Vec<(u32, f64)>> = BTreeMap::new();
    for r in &data.rounds {
        let hit = f64::from(u8::from(r.ci_covers));
        let who = match partisan.get(&r.agent_id) {
            Some(true) => Some("partisan"),
            Some(false) => Some("moderate"),
            None => None,
        };
        for partition in [r.topic_class.as_str().to_string(), format!("topic:{}", r.topic_id)] {
            groups.entry((partition.clone(), "all")).or_default().push((r.agent_id, hit));
            if let Some(w) = who {
                groups.entry((partition, w)).or_default().push((r.agent_id, hit));
            }
        }
    }
    groups
        .into_iter()
        .map(|((partition, group), values)| {
            let (rate, se) = clustered_mean(&values);
            CoverageRow { partition, group: group.to_string(), n: values.len(), rate, se }
        })
        .collect()
}

fn run_models(
    rows: &[&RoundRecord],
    outcome_name: &str,
    y: impl Fn(&RoundRecord) -> f64,
    models: &[(&str, &[&str], bool)],
) -> Result<Vec<(String, RegressionResult)>> {
    let mut out = Vec::new();
    if rows.is_empty() {
        log::warn!("{outcome_name}: empty sample; regressions skipped");
        return Ok(out);
    }
    for (name, terms, control) in models {
        let obs: Vec<Observation> = rows
            .iter()
            .map(|r| {
                let x = terms.iter().map(|t| regressor(r, t)).collect();
                let mut o = observation(r, y(r), x);
                if *control {
                    o.controls = assessment_dummies(r);
                }
                o
            })
            .collect();
        let spec = OlsSpec {
            outcome: outcome_name.into(),
            regressors: terms.iter().map(|t| t.to_string()).collect(),
            controls: if *control { (0..GRID_POINTS).map(|k| format!("a={:.1}", grid_value(k))).collect() } else { vec![] },
            fixed_effects: FixedEffects::ALL,
        };
        match ols_fe_clustered(&obs, &spec) {
            Ok(res) => out.push((name.to_string(), res)),
            Err(crate::Error::Estimation(msg)) => log::warn!("model {name} skipped: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn regressor(r: &RoundRecord, term: &str) -> f64 {
    let b = match term {
        "pro_party" => r.pro_party == Some(true),
        "anti_party" => r.pro_party == Some(false),
        "fake_news" => r.source == Some(SourceKind::FakeNews),
        "polarizing" => r.polarizing == Some(true),
        other => unreachable!("unknown regressor {other}"),
    };
    f64::from(u8::from(b))
}

/// Indicators for the assessment's grid value; continuous assessments are
/// binned to the nearest grid point.
fn assessment_dummies(r: &RoundRecord) -> Vec<f64> {
    let k = r.assessment.and_then(|a| grid_index(round_to_grid(a)));
    (0..GRID_POINTS).map(|j| f64::from(u8::from(k == Some(j)))).collect()
}

/// Assessment regressions with subject, topic and round fixed effects:
///
/// * `pro_party`: a on Pro-Party, Pro/Anti-Party news only;
/// * `pro_anti_vs_neutral`: a on Pro-Party and Anti-Party, neutral news as base;
/// * `fake_politicized` / `fake_neutral`: a on Fake News within each set.
pub fn assessment_regressions(data: &Dataset, outcome: Outcome) -> Result<Vec<(String, RegressionResult)>> {
    let seen: Vec<&RoundRecord> = data.rounds.iter().filter(|r| r.message_seen()).collect();
    let y = |r: &RoundRecord| outcome.apply(r.assessment.expect("seen rows carry an assessment"));
    let pro_anti: Vec<&RoundRecord> = seen.iter().copied().filter(|r| r.pro_party.is_some()).collect();
    let with_neutral: Vec<&RoundRecord> = seen.iter().copied().filter(|r| Category::of(r).is_some()).collect();
    let neutral: Vec<&RoundRecord> = seen.iter().copied().filter(|r| r.topic_class == TopicClass::Neutral).collect();
    let mut out = run_models(&pro_anti, outcome.as_str(), y, &[("pro_party", &["pro_party"], false)])?;
    out.extend(run_models(&with_neutral, outcome.as_str(), y, &[("pro_anti_vs_neutral", &["pro_party", "anti_party"], false)])?);
    out.extend(run_models(&pro_anti, outcome.as_str(), y, &[("fake_politicized", &["fake_news"], false)])?);
    out.extend(run_models(&neutral, outcome.as_str(), y, &[("fake_neutral", &["fake_news"], false)])?);
    Ok(out)
}

/// Follow-message regressions on second-guess rows with Pro/Anti-Party news.
///
/// The `_ctrl` variants add one indicator per assessment grid value; when
/// follow is a function of the assessment alone these absorb it completely.
pub fn polarization_regression(data: &Dataset) -> Result<Vec<(String, RegressionResult)>> {
    let rows: Vec<&RoundRecord> = data
        .rounds
        .iter()
        .filter(|r| r.message_seen() && r.follow.is_some() && r.pro_party.is_some())
        .collect();
    run_models(
        &rows,
        "follow",
        |r| f64::from(r.follow.expect("filtered on follow")),
        &[
            ("follow_pro_party", &["pro_party"], false),
            ("follow_polarizing", &["polarizing"], false),
            ("follow_both", &["pro_party", "polarizing"], false),
            ("follow_pro_party_ctrl", &["pro_party"], true),
            ("follow_polarizing_ctrl", &["polarizing"], true),
            ("follow_both_ctrl", &["pro_party", "polarizing"], true),
        ],
    )
}
