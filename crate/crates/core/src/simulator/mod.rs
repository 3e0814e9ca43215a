//! Runs a cohort through the full question sequence and collects a flat dataset.
//!
//! Per subject: the main questions are shuffled into rounds 1–12 (one slot in
//! 2–11 belongs to the comprehension check, which simulated subjects always
//! pass and which is not recorded), own performance is round 13 and party
//! performance round 14. Performance answers are computed from the cohort's
//! realized main-question scores, so the simulation runs in two passes.

mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{self, AgentSpec, AssessmentScale, Party, PopulationConfig, Updater};
use crate::beliefs::BeliefDist;
use crate::error::{Error, Result};
use crate::protocol::{
    self, Arm, PerformanceKind, RoundRecord, SourceKind, TopicSet, TopicSpec,
};
use crate::streams::{substream, Domain};

pub use io::{emit_csv, format_real, quantize, read_dataset, ROUNDS_FILE, SUBJECTS_FILE};

fn default_seed() -> u64 {
    7
}
fn default_told_prior() -> f64 {
    1.0 / 3.0
}
fn default_second_guess() -> f64 {
    0.5
}

/// Top-level simulation config, usually read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Topic file; relative paths resolve against the config file's directory.
    /// The bundled topic list is used when absent.
    #[serde(default)]
    pub topics: Option<PathBuf>,
    #[serde(default)]
    pub cohort: PopulationConfig,
    /// Share of subjects told that P(True News) = ½.
    #[serde(default = "default_told_prior")]
    pub told_prior_fraction: f64,
    /// Share of subjects in the second-guess arm; the rest are in the WTP arm.
    #[serde(default = "default_second_guess")]
    pub second_guess_fraction: f64,
    #[serde(default)]
    pub assessment_scale: AssessmentScale,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: default_seed(),
            topics: None,
            cohort: PopulationConfig::default(),
            told_prior_fraction: default_told_prior(),
            second_guess_fraction: default_second_guess(),
            assessment_scale: AssessmentScale::Grid,
            output_dir: None,
        }
    }
}

impl SimConfig {
    /// Parses a config file. Errors carry the path and the line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: format!("cannot read config: {e}"),
        })?;
        let mut config: SimConfig = serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if let (Some(topics), Some(dir)) = (&config.topics, path.parent()) {
            if topics.is_relative() {
                config.topics = Some(dir.join(topics));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("told_prior_fraction", self.told_prior_fraction),
            ("second_guess_fraction", self.second_guess_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Validation(format!("{name} must lie in [0, 1], got {f}")));
            }
        }
        if self.cohort.size() == 0 {
            return Err(Error::Validation("cohort size must be at least 1".into()));
        }
        self.cohort.validate()
    }

    pub fn load_topics(&self) -> Result<TopicSet> {
        match &self.topics {
            Some(path) => TopicSet::load(path),
            None => Ok(TopicSet::default_topics()),
        }
    }

    pub fn arms(&self) -> ArmSettings {
        ArmSettings {
            told_prior_fraction: self.told_prior_fraction,
            second_guess_fraction: self.second_guess_fraction,
            assessment_scale: self.assessment_scale,
        }
    }
}

/// Randomization arms and the reporting scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSettings {
    pub told_prior_fraction: f64,
    pub second_guess_fraction: f64,
    pub assessment_scale: AssessmentScale,
}

impl Default for ArmSettings {
    fn default() -> Self {
        SimConfig::default().arms()
    }
}

/// One row of the subjects table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: u32,
    pub party: Party,
    pub partisanship: f64,
    pub updater: String,
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    pub phi: f64,
    pub noise_sd: f64,
    pub prior_true: f64,
    pub told_prior: bool,
    pub arm: Arm,
}

/// Subjects plus their rounds, sorted by (agent, round).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub subjects: Vec<Subject>,
    pub rounds: Vec<RoundRecord>,
}

impl Dataset {
    pub fn subject(&self, id: u32) -> Option<&Subject> {
        self.subjects.iter().find(|s| s.id == id)
    }

    /// Subject ids keyed to their rows for quick lookup.
    pub fn subject_index(&self) -> BTreeMap<u32, &Subject> {
        self.subjects.iter().map(|s| (s.id, s)).collect()
    }
}

/// Builds the cohort described by `config` and simulates it.
pub fn simulate(config: &SimConfig) -> Result<Dataset> {
    config.validate()?;
    let topics = config.load_topics()?;
    let agents = config.cohort.build(&topics, config.seed)?;
    run_cohort(agents, &topics, &config.arms(), config.seed)
}

/// Assigns arms and simulates an explicit list of agents.
pub fn run_cohort(mut agents: Vec<AgentSpec>, topics: &TopicSet, arms: &ArmSettings, seed: u64) -> Result<Dataset> {
    for a in &agents {
        a.validate()?;
    }
    let n = agents.len();
    let told = assign_share(n, arms.told_prior_fraction, substream(seed, Domain::Arms, 0));
    let second = assign_share(n, arms.second_guess_fraction, substream(seed, Domain::Arms, 1));
    let mut subjects = Vec::with_capacity(n);
    for (i, agent) in agents.iter_mut().enumerate() {
        if told[i] {
            agent.prior_true = 0.5;
        }
        let (zeta, kappa) = match agent.updater {
            Updater::Generalized { zeta, kappa } => (Some(zeta), Some(kappa)),
            _ => (None, None),
        };
        subjects.push(Subject {
            id: agent.id,
            party: agent.party,
            partisanship: quantize(agent.partisanship),
            updater: agent.updater.name().to_string(),
            zeta: zeta.map(quantize),
            kappa: kappa.map(quantize),
            phi: quantize(agent.phi),
            noise_sd: quantize(agent.noise_sd()),
            prior_true: quantize(agent.prior_true),
            told_prior: told[i],
            arm: if second[i] { Arm::SecondGuess } else { Arm::Wtp },
        });
    }

    let main: Vec<&TopicSpec> = topics.main_topics().collect();
    let scale = arms.assessment_scale;

    // Pass 1: main questions.
    let mut partial: Vec<(Vec<RoundRecord>, ChaCha8Rng)> = agents
        .par_iter()
        .zip(subjects.par_iter())
        .map(|(agent, subject)| {
            let mut rng = substream(seed, Domain::Behavior, u64::from(agent.id));
            let mut order = main.clone();
            order.shuffle(&mut rng);
            let slots = main_round_numbers(order.len(), &mut rng);
            let last = slots.last().copied();
            let mut rows = Vec::with_capacity(order.len() + 2);
            for (topic, round) in order.into_iter().zip(slots) {
                let theta = match topic.theta_range {
                    Some([lo, hi]) => rng.random_range(lo..=hi),
                    None => topic.theta,
                };
                let ctx = RoundContext {
                    agent,
                    topic,
                    theta,
                    round,
                    wtp_round: subject.arm == Arm::Wtp && Some(round) == last,
                    second_guess: subject.arm == Arm::SecondGuess,
                    scale,
                };
                rows.push(ctx.play(&mut rng)?);
            }
            Ok((rows, rng))
        })
        .collect::<Result<_>>()?;

    // Performance answers from realized main scores.
    let means: Vec<f64> = partial.iter().map(|(rows, _)| mean_main_score(rows, topics)).collect();
    let own_theta = own_performance_thetas(&means);
    let party_mean = |party: Party| -> Option<f64> {
        let xs: Vec<f64> = agents
            .iter()
            .zip(&means)
            .filter(|(a, _)| a.party == party)
            .map(|(_, m)| *m)
            .collect();
        (!xs.is_empty()).then(|| quantize(xs.iter().sum::<f64>() / xs.len() as f64))
    };
    let dem_mean = party_mean(Party::ProDem);
    let rep_mean = party_mean(Party::ProRep);
    let first_extra_round = main.len() as u8 + if main.len() >= 2 { 2 } else { 1 };

    // Pass 2: performance questions.
    partial
        .par_iter_mut()
        .zip(agents.par_iter().zip(subjects.par_iter()))
        .enumerate()
        .try_for_each(|(i, ((rows, rng), (agent, subject)))| -> Result<()> {
            let mut round = first_extra_round;
            if let Some(topic) = topics.performance_topic(PerformanceKind::Own) {
                let ctx = RoundContext {
                    agent,
                    topic,
                    theta: own_theta[i],
                    round,
                    wtp_round: false,
                    second_guess: subject.arm == Arm::SecondGuess,
                    scale,
                };
                rows.push(ctx.play(rng)?);
                round += 1;
            }
            let dem = topics.performance_topic(PerformanceKind::DemScore);
            let rep = topics.performance_topic(PerformanceKind::RepScore);
            let pick = match (dem, rep) {
                (Some(d), Some(r)) => Some(if rng.random_bool(0.5) { d } else { r }),
                (d, r) => d.or(r),
            };
            if let Some(topic) = pick {
                let realized = match topic.performance {
                    Some(PerformanceKind::DemScore) => dem_mean,
                    _ => rep_mean,
                };
                let ctx = RoundContext {
                    agent,
                    topic,
                    theta: realized.unwrap_or(topic.theta),
                    round,
                    wtp_round: false,
                    second_guess: subject.arm == Arm::SecondGuess,
                    scale,
                };
                rows.push(ctx.play(rng)?);
            }
            Ok(())
        })?;

    let mut rounds: Vec<RoundRecord> = partial.into_iter().flat_map(|(rows, _)| rows).collect();
    rounds.sort_by_key(|r| (r.agent_id, r.round));
    mark_party_flags(&mut rounds, &subjects, topics);
    Ok(Dataset { subjects, rounds })
}

/// Marks a `round(share · n)`-sized subset chosen by a seeded permutation.
fn assign_share(n: usize, share: f64, mut rng: ChaCha8Rng) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let k = (share * n as f64).round() as usize;
    let mut flags = vec![false; n];
    for &i in idx.iter().take(k) {
        flags[i] = true;
    }
    flags
}

/// Round numbers for `m` main questions: slots `1..=m+1` minus one slot in
/// `2..=m` reserved for the comprehension check.
fn main_round_numbers<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<u8> {
    if m < 2 {
        return (1..=m as u8).collect();
    }
    let check = rng.random_range(2..=m as u8);
    (1..=(m as u8 + 1)).filter(|&r| r != check).collect()
}

/// Mean guess score over a subject's main questions.
pub fn mean_main_score(rows: &[RoundRecord], topics: &TopicSet) -> f64 {
    let main: Vec<f64> = rows
        .iter()
        .filter(|r| topics.get(&r.topic_id).is_some_and(TopicSpec::is_main))
        .map(|r| r.score_guess)
        .collect();
    if main.is_empty() {
        0.0
    } else {
        main.iter().sum::<f64>() / main.len() as f64
    }
}

/// Own-performance answers: the percentage of the other subjects with a
/// strictly lower mean main score (50 for a cohort of one).
pub fn own_performance_thetas(means: &[f64]) -> Vec<f64> {
    let n = means.len();
    if n <= 1 {
        return vec![50.0; n];
    }
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    means
        .iter()
        .map(|m| {
            let below = sorted.partition_point(|x| x < m);
            quantize(100.0 * below as f64 / (n - 1) as f64)
        })
        .collect()
}

/// Pro-party and polarizing flags. The population mean guess per topic is
/// taken over every subject's first guess.
fn mark_party_flags(rounds: &mut [RoundRecord], subjects: &[Subject], topics: &TopicSet) {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in rounds.iter() {
        let e = sums.entry(r.topic_id.clone()).or_insert((0.0, 0));
        e.0 += r.guess;
        e.1 += 1;
    }
    let parties: BTreeMap<u32, Party> = subjects.iter().map(|s| (s.id, s.party)).collect();
    for r in rounds.iter_mut() {
        let Some(msg) = r.message else { continue };
        let topic = topics.get(&r.topic_id).expect("round topics come from the topic set");
        if topic.neutral {
            continue;
        }
        let party = parties[&r.agent_id];
        let sign = agents::motive_sign(party, topic);
        if party != Party::Indifferent && sign != 0 {
            r.pro_party = Some(msg.sign() * f64::from(sign) > 0.0);
        }
        let (sum, count) = sums[&r.topic_id];
        r.polarizing = Some(protocol::classify_polarizing(r.guess, sum / count as f64, msg));
    }
}

struct RoundContext<'a> {
    agent: &'a AgentSpec,
    topic: &'a TopicSpec,
    theta: f64,
    round: u8,
    wtp_round: bool,
    second_guess: bool,
    scale: AssessmentScale,
}

impl RoundContext<'_> {
    fn play<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RoundRecord> {
        let agent = self.agent;
        let topic = self.topic;
        let theta = quantize(self.theta);
        let belief = agents::form_belief(agent, topic, theta, rng);
        let guess = quantize(belief.median());
        let lower = quantize(belief.quantile(0.25)?);
        let upper = quantize(belief.quantile(0.75)?);
        let (score_lower, score_upper) = protocol::score_bounds(lower, upper, theta)?;
        let source = protocol::draw_source(rng);
        let message = protocol::make_message(source, theta, guess);

        let mut rec = RoundRecord {
            agent_id: agent.id,
            topic_id: topic.id.clone(),
            round: self.round,
            topic_class: topic.class(),
            pro_rep_direction: topic.pro_rep_direction,
            theta,
            guess,
            lower,
            upper,
            source: None,
            message: None,
            assessment: None,
            second_guess: None,
            wtp: None,
            bdm_revealed: None,
            bdm_bonus: None,
            score_guess: quantize(protocol::score_guess(guess, theta)),
            score_lower: quantize(score_lower),
            score_upper: quantize(score_upper),
            score_assessment: None,
            score_second_guess: None,
            pro_party: None,
            polarizing: None,
            follow: None,
            ci_covers: lower <= theta && theta <= upper,
            motive_true: quantize(agent.motive(&topic.id)),
        };
        let Some(msg) = message else {
            return Ok(rec);
        };
        rec.source = Some(source);
        rec.message = Some(msg);

        let mut revealed = true;
        if self.wtp_round {
            let wtp = quantize(agents::wtp_for_message(agent));
            let outcome = protocol::run_bdm(wtp, rng)?;
            revealed = outcome.revealed;
            rec.wtp = Some(wtp);
            rec.bdm_revealed = Some(outcome.revealed);
            rec.bdm_bonus = Some(quantize(outcome.bonus_points));
        }
        let a = if revealed {
            agents::assess(agent, &topic.id, msg, &belief, self.scale, rng)
        } else {
            agents::assess_without_message(agent, self.scale)
        };
        let a = quantize(a);
        rec.assessment = Some(a);
        rec.score_assessment = Some(quantize(assessment_score(a, source, self.scale)?));

        if self.second_guess && revealed {
            let revised = quantize(revise(&belief, msg, a)?);
            rec.second_guess = Some(revised);
            rec.score_second_guess = Some(quantize(protocol::score_guess(revised, theta)));
            rec.follow = Some(protocol::classify_follow(guess, revised, msg));
        }
        Ok(rec)
    }
}

fn revise(belief: &BeliefDist, msg: protocol::MessageDirection, a: f64) -> Result<f64> {
    agents::second_guess(belief, msg, a)
}

fn assessment_score(a: f64, source: SourceKind, scale: AssessmentScale) -> Result<f64> {
    match scale {
        AssessmentScale::Grid => protocol::score_assessment(a, source),
        AssessmentScale::Continuous => Ok(protocol::quadratic_score(a, source)),
    }
}
