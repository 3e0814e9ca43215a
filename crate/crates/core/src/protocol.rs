//! Experiment mechanics: topics, news sources and messages, the three scoring
//! rules, the BDM valuation page, and the Follow-Message / Polarizing
//! classifications.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default topic list shipped with the crate.
pub const DEFAULT_TOPICS_JSON: &str = include_str!("../data/topics.json");

/// Number of assessment radio buttons: 0/10, 1/10, …, 10/10.
pub const GRID_POINTS: usize = 11;

/// Bounds of the BDM valuation and of the uniform counter-draw, in points.
pub const BDM_LIMIT: f64 = 25.0;

/// Which performance question a topic is, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceKind {
    /// Own rank against the cohort on the main questions.
    Own,
    /// Mean main-question score of Pro-Dem subjects.
    DemScore,
    /// Mean main-question score of Pro-Rep subjects.
    RepScore,
}

/// Analysis class of a topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicClass {
    Politicized,
    Performance,
    Neutral,
}

impl TopicClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicClass::Politicized => "politicized",
            TopicClass::Performance => "performance",
            TopicClass::Neutral => "neutral",
        }
    }
}

/// One question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub id: String,
    /// Correct answer. Placeholder for performance topics and for topics with
    /// a `theta_range`, whose answers are realized during simulation.
    pub theta: f64,
    /// Typical answer magnitude used to calibrate belief noise.
    pub scale: f64,
    /// +1 when "greater than" is Pro-Republican, −1 when Pro-Democrat, 0 for neutral.
    pub pro_rep_direction: i8,
    pub is_performance: bool,
    pub neutral: bool,
    /// Default |motive slope| per unit of the answer.
    #[serde(default)]
    pub motive_magnitude: f64,
    /// Answer drawn uniformly per subject from this range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performance: Option<PerformanceKind>,
}

impl TopicSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(format!("topic {}: {msg}", self.id)));
        if self.id.is_empty() {
            return Err(Error::Validation("topic id must be nonempty".into()));
        }
        if !self.theta.is_finite() {
            return bad("theta must be finite".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if !matches!(self.pro_rep_direction, -1..=1) {
            return bad(format!("pro_rep_direction must be -1, 0 or 1, got {}", self.pro_rep_direction));
        }
        if self.neutral != (self.pro_rep_direction == 0) {
            return bad("neutral must hold exactly when pro_rep_direction is 0".into());
        }
        if self.is_performance != self.performance.is_some() {
            return bad("is_performance must match the presence of `performance`".into());
        }
        if self.performance.is_some() && self.theta_range.is_some() {
            return bad("performance topics cannot have a theta_range".into());
        }
        if let Some([lo, hi]) = self.theta_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("theta_range must be increasing, got [{lo}, {hi}]"));
            }
        }
        if !(self.motive_magnitude >= 0.0 && self.motive_magnitude.is_finite()) {
            return bad("motive_magnitude must be nonnegative".into());
        }
        Ok(())
    }

    pub fn class(&self) -> TopicClass {
        match (self.neutral, self.performance) {
            (true, _) => TopicClass::Neutral,
            (false, Some(PerformanceKind::Own)) => TopicClass::Performance,
            (false, _) => TopicClass::Politicized,
        }
    }

    /// Main questions are shuffled into the first block of rounds.
    pub fn is_main(&self) -> bool {
        self.performance.is_none()
    }
}

/// The full question set of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicSet {
    topics: Vec<TopicSpec>,
}

impl TopicSet {
    pub fn new(topics: Vec<TopicSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &topics {
            t.validate()?;
            if !seen.insert(t.id.as_str()) {
                return Err(Error::Validation(format!("duplicate topic id {}", t.id)));
            }
        }
        for kind in [PerformanceKind::Own, PerformanceKind::DemScore, PerformanceKind::RepScore] {
            if topics.iter().filter(|t| t.performance == Some(kind)).count() > 1 {
                return Err(Error::Validation(format!("more than one {kind:?} performance topic")));
            }
        }
        Ok(TopicSet { topics })
    }

    /// Topics from `DEFAULT_TOPICS_JSON`.
    pub fn default_topics() -> Self {
        Self::from_json_str(DEFAULT_TOPICS_JSON, Path::new("topics.json"))
            .expect("bundled topics.json is valid")
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let topics: Vec<TopicSpec> = serde_json::from_str(text).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        TopicSet::new(topics)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: format!("cannot read topic file: {e}"),
        })?;
        Self::from_json_str(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.topics).expect("topics serialize")
    }

    pub fn topics(&self) -> &[TopicSpec] {
        &self.topics
    }

    pub fn get(&self, id: &str) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.id == id)
    }

    pub fn main_topics(&self) -> impl Iterator<Item = &TopicSpec> {
        self.topics.iter().filter(|t| t.is_main())
    }

    pub fn performance_topic(&self, kind: PerformanceKind) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.performance == Some(kind))
    }
}

/// News source behind a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    TrueNews,
    FakeNews,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::TrueNews => "true_news",
            SourceKind::FakeNews => "fake_news",
        }
    }
}

/// Content of the binary message relative to the subject's guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageDirection {
    GreaterThan,
    LessThan,
}

impl MessageDirection {
    /// +1 for "greater than", −1 for "less than".
    pub fn sign(self) -> f64 {
        match self {
            MessageDirection::GreaterThan => 1.0,
            MessageDirection::LessThan => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageDirection::GreaterThan => "greater_than",
            MessageDirection::LessThan => "less_than",
        }
    }
}

/// Fair iid draw of the news source.
pub fn draw_source<R: Rng + ?Sized>(rng: &mut R) -> SourceKind {
    if rng.random_bool(0.5) {
        SourceKind::TrueNews
    } else {
        SourceKind::FakeNews
    }
}

/// True News reports the correct side of the guess and Fake News the wrong one.
///
/// Returns `None` when the guess is exactly correct: no message exists and the
/// news-assessment page is skipped.
pub fn make_message(source: SourceKind, theta: f64, guess: f64) -> Option<MessageDirection> {
    if guess == theta {
        return None;
    }
    let answer_above = theta > guess;
    let says_greater = match source {
        SourceKind::TrueNews => answer_above,
        SourceKind::FakeNews => !answer_above,
    };
    Some(if says_greater {
        MessageDirection::GreaterThan
    } else {
        MessageDirection::LessThan
    })
}

/// Linear guess score `max(100 − |θ − g|, 0)`.
pub fn score_guess(guess: f64, theta: f64) -> f64 {
    (100.0 - (theta - guess).abs()).max(0.0)
}

/// Upper-bound score: slope 3 when the answer lies above the bound, slope 1 below.
pub fn score_upper(upper: f64, theta: f64) -> f64 {
    let loss = if theta >= upper {
        3.0 * (theta - upper)
    } else {
        upper - theta
    };
    (100.0 - loss).max(0.0)
}

/// Lower-bound score: slope 3 when the answer lies below the bound, slope 1 above.
pub fn score_lower(lower: f64, theta: f64) -> f64 {
    let loss = if theta <= lower {
        3.0 * (lower - theta)
    } else {
        theta - lower
    };
    (100.0 - loss).max(0.0)
}

/// Scores for (lower, upper). Rejects crossed bounds.
pub fn score_bounds(lower: f64, upper: f64, theta: f64) -> Result<(f64, f64)> {
    if lower > upper {
        return Err(Error::Validation(format!(
            "lower bound {lower} exceeds upper bound {upper}"
        )));
    }
    Ok((score_lower(lower, theta), score_upper(upper, theta)))
}

/// The assessment grid value `k/10`.
pub fn grid_value(k: usize) -> f64 {
    debug_assert!(k < GRID_POINTS);
    k as f64 / 10.0
}

/// Index of `a` on the 11-point grid, if it lies on it.
pub fn grid_index(a: f64) -> Option<usize> {
    let scaled = a * 10.0;
    let k = scaled.round();
    if (0.0..=10.0).contains(&k) && (scaled - k).abs() < 1e-9 {
        Some(k as usize)
    } else {
        None
    }
}

/// Rounds a probability to the nearest grid point; exact halves round up.
pub fn round_to_grid(p: f64) -> f64 {
    let k = (p.clamp(0.0, 1.0) * 10.0 + 0.5).floor().min(10.0);
    grid_value(k as usize)
}

/// Quadratic assessment score: `100(1 − (1 − a)²)` after True News,
/// `100(1 − a²)` after Fake News.
pub fn score_assessment(a: f64, source: SourceKind) -> Result<f64> {
    let k = grid_index(a)
        .ok_or_else(|| Error::Validation(format!("assessment {a} is not a multiple of 0.1 in [0, 1]")))?;
    Ok(quadratic_score(grid_value(k), source))
}

/// Quadratic score for any report in `[0, 1]`.
pub fn quadratic_score(a: f64, source: SourceKind) -> f64 {
    match source {
        SourceKind::TrueNews => 100.0 * (1.0 - (1.0 - a) * (1.0 - a)),
        SourceKind::FakeNews => 100.0 * (1.0 - a * a),
    }
}

/// Bonus probability earned by a mean score: `x` points give an `x/10` percent chance.
pub fn points_to_bonus_prob(mean_points: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&mean_points) {
        return Err(Error::Validation(format!("mean points must lie in [0, 100], got {mean_points}")));
    }
    Ok(mean_points / 1000.0)
}

/// Result of the BDM page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdmOutcome {
    /// Whether the message is shown. When hidden the subject sees the black bar.
    pub revealed: bool,
    /// Points added to the round's assessment score.
    pub bonus_points: f64,
    /// The uniform counter-draw.
    pub draw: f64,
}

fn check_valuation(valuation: f64) -> Result<()> {
    if !(-BDM_LIMIT..=BDM_LIMIT).contains(&valuation) {
        return Err(Error::Validation(format!(
            "valuation must lie in [-{BDM_LIMIT}, {BDM_LIMIT}], got {valuation}"
        )));
    }
    Ok(())
}

/// Applies the BDM rule to a given counter-draw: a draw above the valuation
/// hides the message and pays the draw; otherwise the message is revealed.
pub fn resolve_bdm(valuation: f64, draw: f64) -> Result<BdmOutcome> {
    check_valuation(valuation)?;
    Ok(if draw > valuation {
        BdmOutcome {
            revealed: false,
            bonus_points: draw,
            draw,
        }
    } else {
        BdmOutcome {
            revealed: true,
            bonus_points: 0.0,
            draw,
        }
    })
}

/// Draws `r ~ U(−25, 25)` and applies [`resolve_bdm`].
pub fn run_bdm<R: Rng + ?Sized>(valuation: f64, rng: &mut R) -> Result<BdmOutcome> {
    check_valuation(valuation)?;
    let draw = rng.random_range(-BDM_LIMIT..BDM_LIMIT);
    resolve_bdm(valuation, draw)
}

/// +1 if the second guess moved in the message's direction, −1 if against it, 0 if unchanged.
pub fn classify_follow(guess: f64, second_guess: f64, msg: MessageDirection) -> i8 {
    let moved = second_guess - guess;
    if moved == 0.0 {
        0
    } else if (moved > 0.0) == (msg == MessageDirection::GreaterThan) {
        1
    } else {
        -1
    }
}

/// A message is polarizing when it points away from the population mean
/// guess. A guess equal to the mean is never polarizing.
pub fn classify_polarizing(guess: f64, population_mean: f64, msg: MessageDirection) -> bool {
    match msg {
        MessageDirection::GreaterThan => guess > population_mean,
        MessageDirection::LessThan => guess < population_mean,
    }
}

/// Which experimental arm a subject belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    SecondGuess,
    Wtp,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::SecondGuess => "second_guess",
            Arm::Wtp => "wtp",
        }
    }
}

/// One subject × question trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub agent_id: u32,
    pub topic_id: String,
    /// Position in the 14-question sequence (1-based).
    pub round: u8,
    pub topic_class: TopicClass,
    pub pro_rep_direction: i8,
    pub theta: f64,
    pub guess: f64,
    pub lower: f64,
    pub upper: f64,
    pub source: Option<SourceKind>,
    pub message: Option<MessageDirection>,
    pub assessment: Option<f64>,
    pub second_guess: Option<f64>,
    pub wtp: Option<f64>,
    pub bdm_revealed: Option<bool>,
    pub bdm_bonus: Option<f64>,
    pub score_guess: f64,
    pub score_lower: f64,
    pub score_upper: f64,
    pub score_assessment: Option<f64>,
    pub score_second_guess: Option<f64>,
    /// Message aligned with the subject's motive on this topic.
    pub pro_party: Option<bool>,
    pub polarizing: Option<bool>,
    pub follow: Option<i8>,
    pub ci_covers: bool,
    /// Ground-truth motive slope used by the simulator.
    pub motive_true: f64,
}

impl RoundRecord {
    /// The subject saw a message and assessed it.
    pub fn message_seen(&self) -> bool {
        self.message.is_some() && self.assessment.is_some() && self.bdm_revealed != Some(false)
    }
}
