use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use moreas::agents::{self, AgentSpec, AssessmentScale, CohortCell, Party, PopulationConfig, Updater, UpdaterSpec};
use moreas::inference::{self, motive_recovery, Outcome, StructuralOptions};
use moreas::protocol::{self, MessageDirection, SourceKind, TopicClass, TopicSet};
use moreas::simulator::{self, Dataset, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

/// Default party split scaled to `n` subjects.
fn cohort(n: u32, updater: UpdaterSpec) -> PopulationConfig {
    let dem = (f64::from(n) * 627.0 / 987.0).round() as u32;
    let rep = (f64::from(n) * 270.0 / 987.0).round() as u32;
    PopulationConfig::with_cells(vec![
        CohortCell { party: Party::ProDem, updater, count: dem },
        CohortCell { party: Party::ProRep, updater, count: rep },
        CohortCell { party: Party::Indifferent, updater, count: n - dem - rep },
    ])
}

fn run(cohort: PopulationConfig) -> Dataset {
    simulator::simulate(&SimConfig { cohort, ..SimConfig::default() }).expect("simulation runs")
}

fn bayesian_null() -> Check {
    let data = run(cohort(1000, UpdaterSpec::Bayesian));
    let subjects = data.subject_index();
    let mut seen = 0;
    let mut mismatched = 0;
    let mut both: BTreeMap<u32, (bool, bool)> = BTreeMap::new();
    for r in data.rounds.iter().filter(|r| r.message_seen()) {
        seen += 1;
        let p = subjects[&r.agent_id].prior_true;
        if r.assessment != Some(protocol::round_to_grid(p)) {
            mismatched += 1;
        }
        let e = both.entry(r.agent_id).or_default();
        match r.message {
            Some(MessageDirection::GreaterThan) => e.0 = true,
            _ => e.1 = true,
        }
    }
    let regs = inference::assessment_regressions(&data, Outcome::Level).expect("regressions run");
    let res = &regs.iter().find(|(m, _)| m == "pro_party").expect("pro_party model").1;
    let (b, se) = (res.coef("pro_party").unwrap(), res.se("pro_party").unwrap());
    let both_msgs = both.values().filter(|(g, l)| *g && *l).count();
    check(
        mismatched == 0 && b == 0.0 && se == 0.0 && both_msgs > 900,
        format!("{seen} assessments, {mismatched} differ from grid(p); {both_msgs} subjects saw both messages; beta={b:e} se={se:e}"),
    )
}

fn generalized_null() -> Check {
    let topics = TopicSet::default_topics();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let mut comparisons = 0;
    for k in 0..100u32 {
        let zeta = rng.random_range(0.0..=3.0);
        let kappa = rng.random_range(0.0..=3.0);
        let agent = AgentSpec {
            id: k,
            party: if k % 2 == 0 { Party::ProRep } else { Party::ProDem },
            partisanship: rng.random(),
            updater: Updater::Generalized { zeta, kappa },
            phi: 0.47,
            noise_sd: None,
            motive_slopes: topics.topics().iter().map(|t| (t.id.clone(), rng.random_range(-3.0..3.0))).collect(),
            motive_shape: Default::default(),
            prior_true: rng.random_range(0.05..0.95),
            median_bias: 1.5,
            belief_noise: 1.5,
            iqr_factor: 1.0,
        };
        for topic in topics.topics() {
            let belief = agents::form_belief(&agent, topic, topic.theta, &mut rng);
            let g = agents::assess(&agent, &topic.id, MessageDirection::GreaterThan, &belief, AssessmentScale::Grid, &mut rng);
            let l = agents::assess(&agent, &topic.id, MessageDirection::LessThan, &belief, AssessmentScale::Grid, &mut rng);
            let gc = agents::assess(&agent, &topic.id, MessageDirection::GreaterThan, &belief, AssessmentScale::Continuous, &mut rng);
            let lc = agents::assess(&agent, &topic.id, MessageDirection::LessThan, &belief, AssessmentScale::Continuous, &mut rng);
            comparisons += 2;
            violations += usize::from(g.to_bits() != l.to_bits()) + usize::from(gc.to_bits() != lc.to_bits());
        }
    }
    // Whole cohort through the simulator: each subject's assessments are constant.
    let data = run(PopulationConfig::partisans(
        100,
        UpdaterSpec::Generalized {
            zeta: agents::ParamValue::Uniform([0.0, 3.0]),
            kappa: agents::ParamValue::Uniform([0.0, 3.0]),
        },
    ));
    let mut per_subject: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in data.rounds.iter().filter(|r| r.message_seen()) {
        per_subject.entry(r.agent_id).or_default().push(r.assessment.unwrap());
    }
    let varying = per_subject.values().filter(|v| v.iter().any(|a| *a != v[0])).count();
    check(
        violations == 0 && varying == 0,
        format!("{comparisons} G/L pairs, {violations} unequal; {varying} of {} simulated subjects vary", per_subject.len()),
    )
}

fn directional_law() -> Check {
    let data = run(cohort(1000, UpdaterSpec::Motivated));
    let (pro, anti) = inference::pro_anti_assessments(&data);
    let diff = pro.iter().sum::<f64>() / pro.len() as f64 - anti.iter().sum::<f64>() / anti.len() as f64;
    let regs = inference::assessment_regressions(&data, Outcome::Level).expect("regressions run");
    let res = &regs.iter().find(|(m, _)| m == "pro_party").unwrap().1;
    let t = res.t("pro_party").unwrap();
    let fosd = inference::fosd_check(&pro, &anti);
    check(
        diff > 0.0 && t > 5.0 && fosd.a_dominates,
        format!(
            "mean(Pro)-mean(Anti)={diff:.4}, clustered t={t:.2}, Pro FOSD Anti at 11 points: {} (max violation {:.4})",
            fosd.a_dominates, fosd.max_violation
        ),
    )
}

fn fake_true() -> Check {
    let data = run(cohort(1000, UpdaterSpec::Motivated));
    let g = inference::gap_stats(&data, Outcome::Level).expect("gap stats");
    let bayes = run(cohort(1000, UpdaterSpec::Bayesian));
    let b = inference::gap_stats(&bayes, Outcome::Level).expect("gap stats");
    let pol = g.demeaned_fake_minus_true_politicized;
    let neu = g.demeaned_fake_minus_true_neutral;
    let (bp, bn) = (b.demeaned_fake_minus_true_politicized, b.demeaned_fake_minus_true_neutral);
    check(
        pol > 0.0 && neu.abs() < 0.01 && bp.abs() < 1e-9 && bn.abs() < 1e-9,
        format!("motivated Fake-True: politicized {pol:.4}, neutral {neu:.4}; bayesian {bp:e} / {bn:e}"),
    )
}

/// Incentive-compatibility oracles by exhaustive search over report grids.
fn incentive_compatibility() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let support: Vec<f64> = (0..=200).map(|i| f64::from(i) * 0.1).collect();
    let mut fails = [0usize; 4];
    for _ in 0..1000 {
        let mut w: Vec<f64> = support.iter().map(|_| rng.random::<f64>().powi(3)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let quantile = |q: f64| {
            let mut acc = 0.0;
            for (x, p) in support.iter().zip(&w) {
                acc += p;
                if acc >= q - 1e-12 {
                    return *x;
                }
            }
            support[support.len() - 1]
        };
        let expect = |f: &dyn Fn(f64) -> f64| support.iter().zip(&w).map(|(t, p)| p * f(*t)).sum::<f64>();
        let best = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            support.iter().map(|r| expect(&|t| f(*r, t))).fold(f64::NEG_INFINITY, f64::max)
        };
        let guess = |r: f64, t: f64| protocol::score_guess(r, t);
        let lower = |r: f64, t: f64| protocol::score_lower(r, t);
        let upper = |r: f64, t: f64| protocol::score_upper(r, t);
        let (m, q25, q75) = (quantile(0.5), quantile(0.25), quantile(0.75));
        fails[0] += usize::from(expect(&|t| guess(m, t)) < best(&guess) - 1e-9);
        fails[1] += usize::from(
            expect(&|t| lower(q25, t)) < best(&lower) - 1e-9 || expect(&|t| upper(q75, t)) < best(&upper) - 1e-9,
        );

        // Quadratic rule: the nearest 0.1 to the belief is optimal.
        let b: f64 = rng.random();
        let score = |a: f64| {
            b * protocol::quadratic_score(a, SourceKind::TrueNews) + (1.0 - b) * protocol::quadratic_score(a, SourceKind::FakeNews)
        };
        let top = (0..protocol::GRID_POINTS).map(|k| score(protocol::grid_value(k))).fold(f64::NEG_INFINITY, f64::max);
        let nearest = (b * 10.0).round() / 10.0;
        fails[2] += usize::from(score(nearest) < top - 1e-9);

        // BDM: reporting the true valuation is optimal.
        let v: f64 = rng.random_range(-25.0..25.0);
        let payoff = |report: f64| {
            let w = report.clamp(-protocol::BDM_LIMIT, protocol::BDM_LIMIT);
            let lim = protocol::BDM_LIMIT;
            v * (w + lim) / (2.0 * lim) + (lim * lim - w * w) / (4.0 * lim)
        };
        let grid_best = (-100..=100).map(|i| payoff(f64::from(i) * 0.5)).fold(f64::NEG_INFINITY, f64::max);
        // The closed form above must describe the mechanism: a higher draw hides and pays it.
        let above = protocol::resolve_bdm(v, v + 1e-9).unwrap();
        let below = protocol::resolve_bdm(v, v - 1e-9).unwrap();
        let truthful = !above.revealed && above.bonus_points == v + 1e-9 && below.revealed && below.bonus_points == 0.0;
        fails[3] += usize::from(payoff(v) < grid_best - 1e-12 || !truthful);
    }
    check(
        fails.iter().all(|f| *f == 0),
        format!("failures out of 1000 each: guess {}, bounds {}, quadratic {}, bdm {}", fails[0], fails[1], fails[2], fails[3]),
    )
}

fn structural_recovery() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for phi0 in [0.2, 0.47, 0.8] {
        let mut cohort = PopulationConfig::partisans(10_000, UpdaterSpec::Motivated);
        cohort.phi = phi0;
        let cfg = SimConfig {
            cohort,
            seed: 21,
            second_guess_fraction: 1.0,
            assessment_scale: AssessmentScale::Continuous,
            ..SimConfig::default()
        };
        let data = simulator::simulate(&cfg).expect("simulation runs");
        let est = inference::estimate_structural(&data, &StructuralOptions::default()).expect("estimates");
        let target = 2.0 / 13.0 * phi0 * phi0;
        let rel = (est.phi_hat_sq - target).abs() / target;

        let mut exact = true;
        let mut neutral: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for r in data.rounds.iter().filter(|r| r.message_seen() && r.topic_class == TopicClass::Neutral) {
            neutral.entry(r.agent_id).or_default().push(inference::clamp_logit(r.assessment.unwrap()));
        }
        for s in &est.subjects {
            let v = &neutral[&s.subject_id];
            exact &= (v.iter().sum::<f64>() / v.len() as f64).to_bits() == s.logit_p_hat.to_bits();
        }
        let n_q: Vec<(usize, usize)> = est.subjects.iter().map(|s| (s.neutral_rounds, s.assessed_rounds)).collect();
        let shape = n_q.iter().all(|&(n, q)| n == 3 && q == 13);

        let rec = motive_recovery(&est);
        let ok = rel < 0.05 && exact && shape && rec.correlation > 0.9 && rec.sign_agreement > 0.9;
        pass &= ok;
        parts.push(format!(
            "phi0={phi0}: phi_hat^2 rel.err {:.2}%, p_hat exact {exact}, N=3/Q=13 {shape}, corr {:.3}, sign {:.3}",
            rel * 100.0,
            rec.correlation,
            rec.sign_agreement
        ));
    }
    check(pass, parts.join("; "))
}

fn overprecision() -> Check {
    let data = run(cohort(1000, UpdaterSpec::Motivated));
    let cov = inference::ci_coverage(&data);
    let get = |p: &str, g: &str| cov.iter().find(|c| c.partition == p && c.group == g).cloned().expect("coverage row");
    let all = get("politicized", "all");
    let partisan = get("politicized", "partisan");
    let moderate = get("politicized", "moderate");

    let mut bayes = cohort(20_000, UpdaterSpec::Bayesian);
    bayes.median_bias = 0.0;
    let bdata = run(bayes);
    let bcov = inference::ci_coverage(&bdata);
    let per_topic: Vec<_> = bcov.iter().filter(|c| c.partition.starts_with("topic:") && c.group == "all").collect();
    let worst = per_topic.iter().map(|c| (c.rate - 0.5).abs()).fold(0.0, f64::max);
    check(
        all.rate + 3.0 * all.se < 0.5 && partisan.rate < moderate.rate && worst <= 0.02,
        format!(
            "motivated politicized {:.3} (se {:.3}); partisan {:.3} vs moderate {:.3}; calibrated max |coverage-0.5| over {} topics {:.4}",
            all.rate,
            all.se,
            partisan.rate,
            moderate.rate,
            per_topic.len(),
            worst
        ),
    )
}

fn polarization_mediation() -> Check {
    let data = run(cohort(1000, UpdaterSpec::Motivated));
    let mut rows = 0;
    let mut bad = 0;
    for r in data.rounds.iter().filter(|r| r.follow.is_some()) {
        rows += 1;
        let a = r.assessment.unwrap();
        let expect = if a > 0.5 { 1 } else if a < 0.5 { -1 } else { 0 };
        bad += usize::from(r.follow != Some(expect));
    }
    let regs = inference::polarization_regression(&data).expect("regressions run");
    let mut worst: f64 = 0.0;
    for (_, res) in regs.iter().filter(|(m, _)| m.ends_with("_ctrl")) {
        for term in ["pro_party", "polarizing"] {
            if let Some(b) = res.coef(term) {
                worst = worst.max(b.abs());
            }
        }
    }
    let raw = regs.iter().find(|(m, _)| m == "follow_polarizing").and_then(|(_, r)| r.coef("polarizing"));
    check(
        rows > 0 && bad == 0 && worst < 1e-6 && regs.len() == 6,
        format!("{rows} second-guess rows, {bad} with follow != sign(a-1/2); max |message coef| with control {worst:e}; polarizing without control {:.4}", raw.unwrap_or(f64::NAN)),
    )
}

fn pipeline(dir: &Path) {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let data = dir.join("data");
    let fig = dir.join("figures");
    assert_eq!(moreas::cli::run(["moreas", "simulate", "--seed", "7", "--out", &s(&data)]), 0);
    assert_eq!(moreas::cli::run(["moreas", "estimate", "--in", &s(&data), "--out", &s(&data), "--logit"]), 0);
    assert_eq!(moreas::cli::run(["moreas", "report", "--in", &s(&data), "--out", &s(&fig), "--svg"]), 0);
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["data", "figures"] {
        for entry in std::fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if ext == "csv" || ext == "svg" {
                out.insert(format!("{sub}/{}", path.file_name().unwrap().to_string_lossy()), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    check(
        fa.len() >= 14 && fa.keys().eq(fb.keys()) && differing.is_empty(),
        format!("{} CSV/SVG artifacts compared, {} differ", fa.len(), differing.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Check, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "bayesian null", bayesian_null, Some(Duration::from_secs(5))),
        (2, "generalized-updater null", generalized_null, None),
        (3, "directional law", directional_law, Some(Duration::from_secs(30))),
        (4, "fake>true mediation", fake_true, None),
        (5, "incentive compatibility", incentive_compatibility, Some(Duration::from_secs(60))),
        (6, "structural recovery", structural_recovery, Some(Duration::from_secs(120))),
        (7, "overprecision", overprecision, None),
        (8, "polarization mediation", polarization_mediation, None),
        (9, "determinism", determinism, None),
    ];
    let mut failed = 0;
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let c = f();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = c.pass && in_time;
        if !pass {
            failed += 1;
        }
        let limit = budget.map(|b| format!(" / limit {}s", b.as_secs())).unwrap_or_default();
        println!(
            "{} criterion {id} ({name}): {} [{:.2}s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            c.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
