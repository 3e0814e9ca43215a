//! Tabular outputs of the estimation step and the figure series built on them.

pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::agents::Party;
use crate::error::{Error, Result};
use crate::inference::{
    self, Category, CategoryMean, CoverageRow, EstimateSet, FosdResult, GapCell, GapStats, Outcome,
    RegressionResult, StructuralOptions,
};
use crate::protocol::{grid_value, SourceKind, GRID_POINTS};
use crate::simulator::{format_real, Dataset};

pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const REGRESSIONS_FILE: &str = "regressions.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const GAPS_FILE: &str = "gaps.csv";
pub const FOSD_FILE: &str = "fosd.csv";
pub const DROPPED_FILE: &str = "dropped.csv";
pub const CDF_FILE: &str = "cdf_pro_anti.csv";
pub const PARTISAN_FILE: &str = "partisan_gaps.csv";
pub const FAKE_TRUE_FILE: &str = "fake_true_cells.csv";
pub const TOPIC_MOTIVES_FILE: &str = "topic_motives.csv";

/// Writes a header plus rows as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let wrap = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Schema { path: path.to_path_buf(), message: format!("{other:?}") },
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn real(x: f64) -> String {
    if x.is_finite() {
        format_real(x)
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimateOptions {
    /// Also run the assessment regressions on `clamp_logit(a)`.
    pub logit: bool,
    pub structural: StructuralOptions,
}

/// Everything the estimate step computes.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutputs {
    pub estimates: EstimateSet,
    /// `(model, result)` pairs.
    pub regressions: Vec<(String, RegressionResult)>,
    pub gaps: GapStats,
    pub coverage: Vec<CoverageRow>,
    pub fosd_pro_anti: FosdResult,
    pub fosd_fake_true: FosdResult,
}

/// Runs the structural estimator and every reduced-form analysis.
///
/// A degenerate `φ̂ = 0` (e.g. a noiseless cohort) skips the motive estimates
/// with a warning rather than failing.
pub fn estimate_all(data: &Dataset, opts: &EstimateOptions) -> Result<EstimateOutputs> {
    let structural = StructuralOptions { allow_degenerate: true, ..opts.structural };
    let estimates = inference::estimate_structural(data, &structural)?;
    let mut regressions = inference::assessment_regressions(data, Outcome::Level)?;
    if opts.logit {
        regressions.extend(
            inference::assessment_regressions(data, Outcome::Logit)?
                .into_iter()
                .map(|(name, r)| (format!("{name}_logit"), r)),
        );
    }
    regressions.extend(inference::polarization_regression(data)?);
    let (pro, anti) = inference::pro_anti_assessments(data);
    let (mut fake, mut truth) = (Vec::new(), Vec::new());
    for r in data.rounds.iter().filter(|r| r.message_seen() && r.pro_party.is_some()) {
        let a = r.assessment.expect("seen rows carry an assessment");
        match r.source {
            Some(SourceKind::FakeNews) => fake.push(a),
            _ => truth.push(a),
        }
    }
    Ok(EstimateOutputs {
        estimates,
        regressions,
        gaps: inference::gap_stats(data, Outcome::Level)?,
        coverage: inference::ci_coverage(data),
        fosd_pro_anti: inference::fosd_check(&pro, &anti),
        fosd_fake_true: inference::fosd_check(&fake, &truth),
    })
}

/// Writes the estimate tables into `dir`.
pub fn write_estimates(out: &EstimateOutputs, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let est = &out.estimates;

    let mut rows = vec![
        vec![String::new(), String::new(), String::new(), "phi_hat".into(), real(est.phi_hat)],
        vec![String::new(), String::new(), String::new(), "phi_hat_sq".into(), real(est.phi_hat_sq)],
    ];
    for s in &est.subjects {
        rows.push(vec![s.subject_id.to_string(), String::new(), String::new(), "logit_p_hat".into(), real(s.logit_p_hat)]);
    }
    for m in &est.motives {
        for (q, v) in [("m_hat", m.m_hat), ("m_hat_winsorized", m.m_hat_winsorized)] {
            rows.push(vec![m.subject_id.to_string(), m.topic_id.clone(), m.round.to_string(), q.into(), real(v)]);
        }
    }
    written.push(write_table(&dir.join(ESTIMATES_FILE), &["subject_id", "topic_id", "round", "quantity", "value"], &rows)?);

    let rows: Vec<Vec<String>> = est
        .dropped
        .iter()
        .map(|d| vec![d.subject_id.to_string(), d.topic_id.clone().unwrap_or_default(), d.reason.clone()])
        .collect();
    written.push(write_table(&dir.join(DROPPED_FILE), &["subject_id", "topic_id", "reason"], &rows)?);

    let mut rows = Vec::new();
    for (model, r) in &out.regressions {
        for i in 0..r.terms.len() {
            rows.push(vec![
                model.clone(),
                r.outcome.clone(),
                r.terms[i].clone(),
                real(r.coefficients[i]),
                real(r.std_errors[i]),
                real(r.t_stats[i]),
                r.n.to_string(),
                r.clusters.to_string(),
            ]);
        }
    }
    written.push(write_table(
        &dir.join(REGRESSIONS_FILE),
        &["model", "outcome", "term", "coef", "se", "t", "n", "clusters"],
        &rows,
    )?);

    let rows: Vec<Vec<String>> = out
        .coverage
        .iter()
        .map(|c| vec![c.partition.clone(), c.group.clone(), c.n.to_string(), real(c.rate), real(c.se)])
        .collect();
    written.push(write_table(&dir.join(COVERAGE_FILE), &["partition", "group", "n", "rate", "se"], &rows)?);

    let g = &out.gaps;
    let mut rows = Vec::new();
    for (name, gap) in [
        ("pro_minus_anti", g.pro_anti),
        ("fake_minus_true_politicized", g.fake_true_politicized),
        ("fake_minus_true_neutral", g.fake_true_neutral),
    ] {
        if let Some(gap) = gap {
            rows.push(vec![
                name.into(),
                "raw".into(),
                real(gap.estimate),
                real(gap.se),
                real(gap.t),
                gap.n.to_string(),
                gap.clusters.to_string(),
            ]);
        }
    }
    for (name, v) in [
        ("pro_minus_anti", g.demeaned_pro_minus_anti),
        ("fake_minus_true_politicized", g.demeaned_fake_minus_true_politicized),
        ("fake_minus_true_neutral", g.demeaned_fake_minus_true_neutral),
    ] {
        rows.push(vec![name.into(), "demeaned".into(), real(v), String::new(), String::new(), String::new(), String::new()]);
    }
    written.push(write_table(&dir.join(GAPS_FILE), &["statistic", "kind", "estimate", "se", "t", "n", "clusters"], &rows)?);

    let mut rows = Vec::new();
    for (name, f) in [("pro_over_anti", &out.fosd_pro_anti), ("fake_over_true", &out.fosd_fake_true)] {
        rows.push(vec![name.into(), if f.a_dominates { "1" } else { "0" }.into(), real(f.max_violation)]);
    }
    written.push(write_table(&dir.join(FOSD_FILE), &["comparison", "dominates", "max_violation"], &rows)?);
    Ok(written)
}

/// One row of `estimates.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub subject_id: Option<u32>,
    pub topic_id: Option<String>,
    pub quantity: String,
    pub value: f64,
}

/// Reads `estimates.csv`; only the documented columns are used.
pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>> {
    let wrap = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Schema { path: path.to_path_buf(), message: format!("{other:?}") },
    };
    let mut reader = csv::Reader::from_path(path).map_err(wrap)?;
    let headers = reader.headers().map_err(wrap)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            message: format!("missing column(s): {name}"),
        })
    };
    let (cs, ct, cq, cv) = (col("subject_id")?, col("topic_id")?, col("quantity")?, col("value")?);
    let bad = |line: usize, what: &str| Error::Schema {
        path: path.to_path_buf(),
        message: format!("line {line}: cannot parse {what}"),
    };
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(wrap)?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let subject_id = match field(cs) {
            "" => None,
            s => Some(s.parse().map_err(|_| bad(i + 2, "subject_id"))?),
        };
        let topic_id = Some(field(ct).to_string()).filter(|s| !s.is_empty());
        out.push(EstimateRow {
            subject_id,
            topic_id,
            quantity: field(cq).to_string(),
            value: field(cv).parse().map_err(|_| bad(i + 2, "value"))?,
        });
    }
    Ok(out)
}

/// Mean winsorized motive estimate by topic and party.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMotiveRow {
    pub topic_id: String,
    pub party: Option<Party>,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

/// Series behind each figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Figures {
    /// Pro-Party vs Anti-Party assessment CDFs on the grid.
    pub cdf: FosdResult,
    /// Subject-demeaned assessments by category for partisans and moderates.
    pub partisan: Vec<(String, CategoryMean)>,
    /// Subject-demeaned assessments by category × source.
    pub fake_true: Vec<GapCell>,
    pub topic_motives: Vec<TopicMotiveRow>,
}

pub fn build_figures(data: &Dataset, estimates: &[EstimateRow]) -> Result<Figures> {
    let (pro, anti) = inference::pro_anti_assessments(data);
    let cdf = inference::fosd_check(&pro, &anti);

    let split = inference::partisan_split(data);
    let mut partisan = Vec::new();
    for (label, flag) in [("partisan", true), ("moderate", false)] {
        let rows = data.rounds.iter().filter(|r| split.get(&r.agent_id) == Some(&flag));
        let stats = inference::gap_stats_for(rows, Outcome::Level)?;
        partisan.extend(stats.category_means.into_iter().map(|c| (label.to_string(), c)));
    }
    let fake_true = inference::gap_stats(data, Outcome::Level)?.cells;

    let parties: BTreeMap<u32, Party> = data.subjects.iter().map(|s| (s.id, s.party)).collect();
    let mut groups: BTreeMap<(String, Option<Party>), Vec<f64>> = BTreeMap::new();
    for e in estimates.iter().filter(|e| e.quantity == "m_hat_winsorized") {
        let (Some(topic), Some(id)) = (&e.topic_id, e.subject_id) else { continue };
        groups.entry((topic.clone(), parties.get(&id).copied())).or_default().push(e.value);
    }
    let topic_motives = groups
        .into_iter()
        .map(|((topic_id, party), v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            TopicMotiveRow { topic_id, party, n, mean, se: (var / n as f64).sqrt() }
        })
        .collect();
    Ok(Figures { cdf, partisan, fake_true, topic_motives })
}

fn party_name(p: Option<Party>) -> String {
    p.map(|p| p.as_str().to_string()).unwrap_or_default()
}

/// Writes the figure CSVs, plus one SVG per figure when `svg` is set.
pub fn write_figures(fig: &Figures, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let rows: Vec<Vec<String>> = (0..GRID_POINTS)
        .map(|k| vec![real(grid_value(k)), real(fig.cdf.cdf_a[k]), real(fig.cdf.cdf_b[k])])
        .collect();
    written.push(write_table(&dir.join(CDF_FILE), &["assessment", "cdf_pro_party", "cdf_anti_party"], &rows)?);

    let ci = |mean: f64, se: f64| (real(mean - 1.96 * se), real(mean + 1.96 * se));
    let rows: Vec<Vec<String>> = fig
        .partisan
        .iter()
        .map(|(g, c)| {
            let (lo, hi) = ci(c.mean, c.se);
            vec![g.clone(), c.category.as_str().into(), c.n.to_string(), real(c.mean), real(c.se), lo, hi]
        })
        .collect();
    written.push(write_table(&dir.join(PARTISAN_FILE), &["group", "category", "n", "mean", "se", "ci_low", "ci_high"], &rows)?);

    let rows: Vec<Vec<String>> = fig
        .fake_true
        .iter()
        .map(|c| {
            let (lo, hi) = ci(c.mean, c.se);
            vec![c.category.as_str().into(), c.source.as_str().into(), c.n.to_string(), real(c.mean), real(c.se), lo, hi]
        })
        .collect();
    written.push(write_table(&dir.join(FAKE_TRUE_FILE), &["category", "source", "n", "mean", "se", "ci_low", "ci_high"], &rows)?);

    let rows: Vec<Vec<String>> = fig
        .topic_motives
        .iter()
        .map(|t| vec![t.topic_id.clone(), party_name(t.party), t.n.to_string(), real(t.mean), real(t.se)])
        .collect();
    written.push(write_table(&dir.join(TOPIC_MOTIVES_FILE), &["topic_id", "party", "n", "mean_m_hat", "se"], &rows)?);

    if svg {
        let grid: Vec<f64> = (0..GRID_POINTS).map(grid_value).collect();
        let line = |cdf: &[f64]| grid.iter().copied().zip(cdf.iter().copied()).collect::<Vec<_>>();
        let doc = svg::line_chart(
            "CDF of assessments",
            "stated P(True)",
            "share at or below",
            &[("Pro-Party", line(&fig.cdf.cdf_a)), ("Anti-Party", line(&fig.cdf.cdf_b))],
        );
        written.push(write_text(&dir.join("cdf_pro_anti.svg"), &doc)?);

        let cats = [Category::ProParty, Category::Neutral, Category::AntiParty];
        let names = ["Pro-Party", "Neutral", "Anti-Party"];
        let series: Vec<(&str, Vec<(f64, f64)>)> = [("Partisan", "partisan"), ("Moderate", "moderate")]
            .iter()
            .map(|(label, key)| {
                let vals = cats
                    .iter()
                    .map(|cat| {
                        fig.partisan
                            .iter()
                            .find(|(g, c)| g == key && c.category == *cat)
                            .map_or((f64::NAN, f64::NAN), |(_, c)| (c.mean, 1.96 * c.se))
                    })
                    .collect();
                (*label, vals)
            })
            .collect();
        let doc = svg::bar_chart("News direction and partisanship", "demeaned P(True)", &names, &series);
        written.push(write_text(&dir.join("partisan_gaps.svg"), &doc)?);

        let series: Vec<(&str, Vec<(f64, f64)>)> = [("True News", SourceKind::TrueNews), ("Fake News", SourceKind::FakeNews)]
            .iter()
            .map(|(label, src)| {
                let vals = cats
                    .iter()
                    .map(|cat| {
                        fig.fake_true
                            .iter()
                            .find(|c| c.category == *cat && c.source == *src)
                            .map_or((f64::NAN, f64::NAN), |c| (c.mean, 1.96 * c.se))
                    })
                    .collect();
                (*label, vals)
            })
            .collect();
        let doc = svg::bar_chart("Assessments of fake news", "demeaned P(True)", &names, &series);
        written.push(write_text(&dir.join("fake_true_cells.svg"), &doc)?);
    }
    Ok(written)
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{PopulationConfig, UpdaterSpec};
    use crate::simulator::{simulate, SimConfig};

    #[test]
    fn estimate_and_figure_files() {
        let cfg = SimConfig { cohort: PopulationConfig::partisans(60, UpdaterSpec::Motivated), ..SimConfig::default() };
        let data = simulate(&cfg).unwrap();
        let out = estimate_all(&data, &EstimateOptions { logit: true, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_estimates(&out, dir.path()).unwrap();
        let est = read_estimates(&dir.path().join(ESTIMATES_FILE)).unwrap();
        assert!(est.iter().any(|e| e.quantity == "phi_hat" && e.subject_id.is_none()));
        let fig = build_figures(&data, &est).unwrap();
        let files = write_figures(&fig, dir.path(), true).unwrap();
        assert_eq!(files.len(), 7);
        let cdf = std::fs::read_to_string(dir.path().join(CDF_FILE)).unwrap();
        assert_eq!(cdf.lines().count(), 12);
        assert!(out.regressions.iter().any(|(m, r)| m == "pro_party_logit" && r.outcome == "logit_assessment"));
    }

    #[test]
    fn bayesian_cohort_figures_are_flat() {
        let cfg = SimConfig { cohort: PopulationConfig::partisans(60, UpdaterSpec::Bayesian), ..SimConfig::default() };
        let data = simulate(&cfg).unwrap();
        let out = estimate_all(&data, &EstimateOptions::default()).unwrap();
        assert!(out.estimates.motives_skipped);
        let fig = build_figures(&data, &[]).unwrap();
        assert!(fig.partisan.iter().all(|(_, c)| c.mean.abs() < 1e-12));
        assert!(fig.fake_true.iter().all(|c| c.n == 0 || c.mean.abs() < 1e-12));
    }
}
