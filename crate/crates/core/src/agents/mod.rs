//! Behavioral rules for simulated subjects: belief formation, news
//! assessments, second guesses and willingness to pay.
//!
//! Three updaters are supported. Bayesians report their prior that the source
//! is True News whatever the message says. Motivated reasoners add
//! `φ · (m(θ | message true) − m(θ | message false))` plus `N(0, φ²)` noise to
//! the log odds. Generalized updaters scale the prior log odds by `ζ` and the
//! log likelihood ratio by `κ`; since messages compare the answer to the
//! median, that ratio is zero and they are message-invariant too.

mod population;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::beliefs::BeliefDist;
use crate::error::{Error, Result};
use crate::normal::{self, logistic, logit};
use crate::protocol::{round_to_grid, MessageDirection, PerformanceKind, TopicSpec};

pub use population::{CohortCell, ParamValue, PopulationConfig, UpdaterSpec};

/// Party preference from the thermometer ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    ProDem,
    ProRep,
    Indifferent,
}

impl Party {
    /// +1 Pro-Rep, −1 Pro-Dem, 0 Indifferent.
    pub fn sign(self) -> i8 {
        match self {
            Party::ProDem => -1,
            Party::ProRep => 1,
            Party::Indifferent => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::ProDem => "pro_dem",
            Party::ProRep => "pro_rep",
            Party::Indifferent => "indifferent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Updater {
    Bayesian,
    Motivated,
    Generalized { zeta: f64, kappa: f64 },
}

impl Updater {
    pub fn name(&self) -> &'static str {
        match self {
            Updater::Bayesian => "bayesian",
            Updater::Motivated => "motivated",
            Updater::Generalized { .. } => "generalized",
        }
    }
}

/// Functional form of the motive over answers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotiveShape {
    /// `m(θ) = m · θ`.
    #[default]
    Linear,
    /// `m(θ) = −m · (θ* − θ)²` with the ideal point `θ*` at the prior median.
    Quadratic,
}

/// How stated assessments are recorded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentScale {
    /// The experiment's eleven radio buttons.
    #[default]
    Grid,
    /// Raw posterior probabilities, as generated by the noisy model.
    Continuous,
}

impl AssessmentScale {
    pub fn report(self, p: f64) -> f64 {
        match self {
            AssessmentScale::Grid => round_to_grid(p),
            AssessmentScale::Continuous => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: u32,
    pub party: Party,
    /// Absolute gap between party ratings, rescaled to `[0, 1]`.
    pub partisanship: f64,
    pub updater: Updater,
    /// Susceptibility: the weight on the motive and, by default, the sd of updating noise.
    pub phi: f64,
    /// Overrides the noise sd when set; otherwise it equals `phi`.
    #[serde(default)]
    pub noise_sd: Option<f64>,
    /// Motive slope per unit of the answer, keyed by topic id. Missing means 0.
    pub motive_slopes: BTreeMap<String, f64>,
    #[serde(default)]
    pub motive_shape: MotiveShape,
    /// Prior probability that a message comes from True News.
    pub prior_true: f64,
    /// Shift of the prior median in the motive direction, in scale units per unit partisanship.
    pub median_bias: f64,
    /// Sd of the prior median error, in scale units.
    pub belief_noise: f64,
    /// Multiplier on the calibrated IQR; below 1 is overprecision.
    pub iqr_factor: f64,
}

impl AgentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(format!("agent {}: {msg}", self.id)));
        if !(0.0..=1.0).contains(&self.partisanship) {
            return bad(format!("partisanship must lie in [0, 1], got {}", self.partisanship));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return bad(format!("phi must be nonnegative, got {}", self.phi));
        }
        if let Some(sd) = self.noise_sd {
            if !(sd >= 0.0 && sd.is_finite()) {
                return bad(format!("noise_sd must be nonnegative, got {sd}"));
            }
        }
        if let Updater::Generalized { zeta, kappa } = self.updater {
            if !(zeta >= 0.0 && kappa >= 0.0) {
                return bad("zeta and kappa must be nonnegative".into());
            }
        }
        if !(self.prior_true > 0.0 && self.prior_true < 1.0) {
            return bad(format!("prior_true must lie in (0, 1), got {}", self.prior_true));
        }
        if self.median_bias.is_nan() || self.median_bias < 0.0 {
            return bad("median_bias must be nonnegative".into());
        }
        if !(self.belief_noise > 0.0 && self.iqr_factor > 0.0) {
            return bad("belief_noise and iqr_factor must be positive".into());
        }
        Ok(())
    }

    /// Sd of the log-odds updating noise.
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd.unwrap_or(self.phi)
    }

    pub fn motive(&self, topic_id: &str) -> f64 {
        self.motive_slopes.get(topic_id).copied().unwrap_or(0.0)
    }
}

/// Direction of an agent's motive on a topic: +1 when higher answers are
/// attractive, −1 when lower ones are, 0 when the agent has no motive.
///
/// Everyone wants a higher own-performance rank; on politicized topics the
/// direction follows the party, and indifferent subjects have none.
pub fn motive_sign(party: Party, topic: &TopicSpec) -> i8 {
    if topic.neutral {
        return 0;
    }
    if topic.performance == Some(PerformanceKind::Own) {
        return 1;
    }
    party.sign() * topic.pro_rep_direction
}

/// Prior belief for a question with answer `theta`.
///
/// The median is shifted by `median_bias · partisanship` scale units in the
/// motive direction plus `N(0, belief_noise²)` scale units of error, and the IQR
/// is `iqr_factor` times the one under which the 50% interval covers the
/// answer half the time. Topics with a uniform `theta_range` get the
/// uniform's median and quartile width regardless of the draw.
pub fn form_belief<R: Rng + ?Sized>(agent: &AgentSpec, topic: &TopicSpec, theta: f64, rng: &mut R) -> BeliefDist {
    if let Some([lo, hi]) = topic.theta_range {
        return BeliefDist::new(0.5 * (lo + hi), 0.5 * (hi - lo) * agent.iqr_factor)
            .expect("validated range gives a positive width");
    }
    let error: f64 = Normal::new(0.0, agent.belief_noise)
        .expect("belief noise is positive")
        .sample(rng);
    let bias = agent.median_bias * agent.partisanship * f64::from(motive_sign(agent.party, topic));
    let median = theta + (bias + error) * topic.scale;
    let iqr = agent.iqr_factor * agent.belief_noise * topic.scale * 2.0 * normal::z75();
    BeliefDist::new(median, iqr).expect("belief parameters are validated")
}

/// `m(θ | θ > μ) − m(θ | θ < μ)` under the agent's belief, reading each term
/// as a conditional expectation of the motive.
pub fn motive_gap(agent: &AgentSpec, topic_id: &str, belief: &BeliefDist) -> f64 {
    let slope = agent.motive(topic_id);
    match agent.motive_shape {
        MotiveShape::Linear => slope * belief.conditional_range(),
        MotiveShape::Quadratic => quadratic_motive_gap(slope, belief, belief.median()),
    }
}

/// Gap for `m(θ) = −m (θ* − θ)²`: `E[(θ−θ*)² | θ > μ] − E[(θ−θ*)² | θ < μ]
/// = 4 (μ − θ*) σ √(2/π)`.
fn quadratic_motive_gap(slope: f64, belief: &BeliefDist, ideal: f64) -> f64 {
    let offset = belief.median() - ideal;
    -slope * 4.0 * offset * belief.sd() * (2.0 / std::f64::consts::PI).sqrt()
}

/// Posterior P(True News) before noise and before any reporting grid.
///
/// `shock` is the log-odds noise draw; it is ignored for Bayesian and
/// generalized updaters.
pub fn posterior_true(agent: &AgentSpec, topic_id: &str, msg: MessageDirection, belief: &BeliefDist, shock: f64) -> f64 {
    match agent.updater {
        Updater::Bayesian => agent.prior_true,
        Updater::Generalized { zeta, .. } => logistic(zeta * logit(agent.prior_true)),
        Updater::Motivated => {
            let drift = msg.sign() * agent.phi * motive_gap(agent, topic_id, belief);
            logistic(logit(agent.prior_true) + drift + shock)
        }
    }
}

/// Stated assessment with a given noise draw.
pub fn assess_with_shock(
    agent: &AgentSpec,
    topic_id: &str,
    msg: MessageDirection,
    belief: &BeliefDist,
    shock: f64,
    scale: AssessmentScale,
) -> f64 {
    scale.report(posterior_true(agent, topic_id, msg, belief, shock))
}

/// Stated P(True News) after a message. Only motivated updaters draw noise.
pub fn assess<R: Rng + ?Sized>(
    agent: &AgentSpec,
    topic_id: &str,
    msg: MessageDirection,
    belief: &BeliefDist,
    scale: AssessmentScale,
    rng: &mut R,
) -> f64 {
    let shock = match agent.updater {
        Updater::Motivated if agent.noise_sd() > 0.0 => Normal::new(0.0, agent.noise_sd())
            .expect("noise sd is positive")
            .sample(rng),
        _ => 0.0,
    };
    assess_with_shock(agent, topic_id, msg, belief, shock, scale)
}

/// Assessment when the message is hidden behind the BDM black bar: the prior.
pub fn assess_without_message(agent: &AgentSpec, scale: AssessmentScale) -> f64 {
    scale.report(agent.prior_true)
}

/// Revised guess after assessing a message: the median of the assessment-weighted posterior.
pub fn second_guess(belief: &BeliefDist, msg: MessageDirection, a: f64) -> Result<f64> {
    belief.revise_median(msg, a)
}

/// Willingness to pay, in points, to see the message.
///
/// The agent anticipates its own updating noise but not its motive, and treats
/// whatever posterior it ends up with as correct, so the perceived gain is
/// `E[100 (1 − a(1 − a))] − 100 (1 − p(1 − p))`. The result does not depend on
/// the topic. Clamped to the BDM range.
pub fn wtp_for_message(agent: &AgentSpec) -> f64 {
    let p = agent.prior_true;
    let perceived = |a: f64| 100.0 * (1.0 - a * (1.0 - a));
    let value = match agent.updater {
        Updater::Bayesian => 0.0,
        Updater::Generalized { zeta, .. } => perceived(logistic(zeta * logit(p))) - perceived(p),
        Updater::Motivated => {
            let sd = agent.noise_sd();
            if sd == 0.0 {
                0.0
            } else {
                let center = logit(p);
                expect_normal(|z| perceived(logistic(center + sd * z))) - perceived(p)
            }
        }
    };
    value.clamp(-crate::protocol::BDM_LIMIT, crate::protocol::BDM_LIMIT)
}

/// `E[f(Z)]` for standard normal `Z` by composite Simpson on `[−10, 10]`.
fn expect_normal(f: impl Fn(f64) -> f64) -> f64 {
    const STEPS: usize = 2000;
    let (lo, hi) = (-10.0, 10.0);
    let h = (hi - lo) / STEPS as f64;
    let g = |z: f64| f(z) * normal::pdf(z);
    let mut acc = g(lo) + g(hi);
    for i in 1..STEPS {
        let z = lo + h * i as f64;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(z);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{TopicSet, GRID_POINTS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent(updater: Updater, party: Party) -> AgentSpec {
        AgentSpec {
            id: 0,
            party,
            partisanship: 0.8,
            updater,
            phi: 0.47,
            noise_sd: None,
            motive_slopes: BTreeMap::from([("crime_under_obama".to_string(), 0.126)]),
            motive_shape: MotiveShape::Linear,
            prior_true: 0.58,
            median_bias: 0.0,
            belief_noise: 1.0,
            iqr_factor: 1.0,
        }
    }

    #[test]
    fn motivated_example_evaluates_noisy_rule() {
        let a = agent(Updater::Motivated, Party::ProRep);
        let b = BeliefDist::new(53.0, 10.0).unwrap();
        let p = posterior_true(&a, "crime_under_obama", MessageDirection::GreaterThan, &b, 0.0);
        // Oracle: logistic(logit 0.58 + 0.47 · 0.126 · 11.8303).
        let drift: f64 = 0.47 * 0.126 * 10.0 * 1.182_945_419_957_696;
        assert!((drift - 0.700).abs() < 1e-3);
        let expected = 1.0 / (1.0 + (-(0.58f64 / 0.42).ln() - drift).exp());
        assert!((p - expected).abs() < 1e-6);
        assert!((p - 0.736).abs() < 1e-3);
        assert_eq!(
            assess_with_shock(&a, "crime_under_obama", MessageDirection::GreaterThan, &b, 0.0, AssessmentScale::Grid),
            0.7
        );
        // No motive on a neutral topic.
        assert_eq!(
            assess_with_shock(&a, "latitude_center_us", MessageDirection::GreaterThan, &b, 0.0, AssessmentScale::Grid),
            0.6
        );
    }

    #[test]
    fn bayesian_and_generalized_ignore_messages() {
        let b = BeliefDist::new(53.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut bayes = agent(Updater::Bayesian, Party::ProRep);
        bayes.prior_true = 0.5;
        for msg in [MessageDirection::GreaterThan, MessageDirection::LessThan] {
            assert_eq!(assess(&bayes, "crime_under_obama", msg, &b, AssessmentScale::Grid, &mut rng), 0.5);
        }
        for i in 0..100 {
            let zeta = 3.0 * (i as f64) / 99.0;
            let g = agent(Updater::Generalized { zeta, kappa: 3.0 - zeta }, Party::ProDem);
            let up = assess(&g, "crime_under_obama", MessageDirection::GreaterThan, &b, AssessmentScale::Continuous, &mut rng);
            let down = assess(&g, "crime_under_obama", MessageDirection::LessThan, &b, AssessmentScale::Continuous, &mut rng);
            assert_eq!(up.to_bits(), down.to_bits());
        }
    }

    #[test]
    fn directional_law_without_noise() {
        let b = BeliefDist::new(53.0, 10.0).unwrap();
        for (slope, phi) in [(0.126, 0.47), (-0.126, 0.47), (0.126, 0.0), (0.0, 1.0)] {
            let mut a = agent(Updater::Motivated, Party::ProRep);
            a.phi = phi;
            a.motive_slopes.insert("crime_under_obama".into(), slope);
            let up = posterior_true(&a, "crime_under_obama", MessageDirection::GreaterThan, &b, 0.0);
            let down = posterior_true(&a, "crime_under_obama", MessageDirection::LessThan, &b, 0.0);
            assert_eq!(up > down, phi * slope > 0.0, "slope {slope}, phi {phi}");
        }
    }

    #[test]
    fn quadratic_motive_at_prior_median_is_flat() {
        let mut a = agent(Updater::Motivated, Party::ProRep);
        a.motive_shape = MotiveShape::Quadratic;
        let b = BeliefDist::new(53.0, 10.0).unwrap();
        assert_eq!(motive_gap(&a, "crime_under_obama", &b), 0.0);
        // Off-center ideal point: compare with the truncated second-moment formula.
        let gap = quadratic_motive_gap(1.0, &b, 50.0);
        let sd = b.sd();
        let k = (2.0 / std::f64::consts::PI).sqrt();
        let above = 9.0 + 6.0 * sd * k + sd * sd;
        let below = 9.0 - 6.0 * sd * k + sd * sd;
        assert!((gap + (above - below)).abs() < 1e-9);
    }

    #[test]
    fn beliefs_are_calibrated_without_bias() {
        let topics = TopicSet::default_topics();
        let topic = topics.get("crime_under_obama").unwrap();
        let a = agent(Updater::Bayesian, Party::Indifferent);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10_000;
        let mut covered = 0;
        let mut total_median = 0.0;
        for _ in 0..n {
            let b = form_belief(&a, topic, topic.theta, &mut rng);
            let (lo, hi) = (b.quantile(0.25).unwrap(), b.quantile(0.75).unwrap());
            covered += usize::from(lo <= topic.theta && topic.theta <= hi);
            total_median += b.median();
        }
        let coverage = covered as f64 / n as f64;
        assert!((coverage - 0.5).abs() < 0.02, "{coverage}");
        let se = topic.scale / (n as f64).sqrt();
        assert!((total_median / n as f64 - topic.theta).abs() < 4.0 * se);
    }

    #[test]
    fn partisan_priors_lean_toward_motive() {
        let topics = TopicSet::default_topics();
        let crime = topics.get("crime_under_obama").unwrap();
        let mut a = agent(Updater::Motivated, Party::ProRep);
        a.median_bias = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean: f64 = (0..2000).map(|_| form_belief(&a, crime, crime.theta, &mut rng).median()).sum::<f64>() / 2000.0;
        assert!(mean > crime.theta + 4.0);
        a.party = Party::ProDem;
        let mean: f64 = (0..2000).map(|_| form_belief(&a, crime, crime.theta, &mut rng).median()).sum::<f64>() / 2000.0;
        assert!(mean < crime.theta - 4.0);
    }

    #[test]
    fn motive_signs_follow_topic_table() {
        let topics = TopicSet::default_topics();
        let own = topics.get("own_performance").unwrap();
        let climate = topics.get("climate_change").unwrap();
        let random = topics.get("random_number").unwrap();
        for party in [Party::ProDem, Party::ProRep, Party::Indifferent] {
            assert_eq!(motive_sign(party, own), 1);
            assert_eq!(motive_sign(party, random), 0);
        }
        assert_eq!(motive_sign(Party::ProRep, climate), -1);
        assert_eq!(motive_sign(Party::ProDem, climate), 1);
        assert_eq!(motive_sign(Party::Indifferent, climate), 0);
    }

    #[test]
    fn second_guess_follows_assessment_sign() {
        let b = BeliefDist::new(50.0, 10.0).unwrap();
        for k in 0..GRID_POINTS {
            let a = crate::protocol::grid_value(k);
            for msg in [MessageDirection::GreaterThan, MessageDirection::LessThan] {
                let revised = second_guess(&b, msg, a).unwrap();
                let follow = crate::protocol::classify_follow(50.0, revised, msg);
                let expected = if a > 0.5 { 1 } else if a < 0.5 { -1 } else { 0 };
                assert_eq!(follow, expected, "a={a}");
            }
        }
    }

    #[test]
    fn wtp_tracks_anticipated_noise() {
        let mut a = agent(Updater::Bayesian, Party::ProDem);
        assert_eq!(wtp_for_message(&a), 0.0);
        a.updater = Updater::Motivated;
        a.phi = 0.0;
        assert_eq!(wtp_for_message(&a), 0.0);
        let mut last = 0.0;
        for phi in [0.2, 0.47, 0.8, 1.2, 2.0] {
            a.phi = phi;
            let w = wtp_for_message(&a);
            assert!(w > last, "phi {phi}: {w} <= {last}");
            assert!(w <= 25.0);
            last = w;
        }
        // Monte Carlo cross-check of the quadrature.
        a.phi = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let normal = Normal::new(0.0, 0.8).unwrap();
        let n = 100_000;
        let mc: f64 = (0..n)
            .map(|_| {
                let x = logistic(logit(0.58) + normal.sample(&mut rng));
                100.0 * (1.0 - x * (1.0 - x))
            })
            .sum::<f64>()
            / n as f64
            - 100.0 * (1.0 - 0.58 * 0.42);
        assert!((wtp_for_message(&a) - mc).abs() < 0.1, "{mc}");
    }
}
