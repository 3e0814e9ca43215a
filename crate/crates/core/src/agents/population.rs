//! Cohort configuration: counts per (party, updater) cell and the parameter
//! distributions agents are drawn from.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{motive_sign, AgentSpec, MotiveShape, Party, Updater};
use crate::error::{Error, Result};
use crate::normal::{logistic, logit};
use crate::protocol::TopicSet;
use crate::streams::{substream, Domain};

/// A fixed value or a uniform range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Fixed(f64),
    Uniform([f64; 2]),
}

impl ParamValue {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ParamValue::Fixed(v) => v,
            ParamValue::Uniform([lo, hi]) if lo == hi => lo,
            ParamValue::Uniform([lo, hi]) => rng.random_range(lo..=hi),
        }
    }

    fn check(self, name: &str, min: f64) -> Result<()> {
        let ok = match self {
            ParamValue::Fixed(v) => v >= min && v.is_finite(),
            ParamValue::Uniform([lo, hi]) => lo >= min && lo <= hi && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("{name} must be >= {min} with an ordered range")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdaterSpec {
    Bayesian,
    Motivated,
    Generalized { zeta: ParamValue, kappa: ParamValue },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCell {
    pub party: Party,
    pub updater: UpdaterSpec,
    pub count: u32,
}

fn default_phi() -> f64 {
    0.47
}
fn default_prior_mean() -> f64 {
    0.58
}
fn default_prior_logit_sd() -> f64 {
    0.4
}
fn default_median_bias() -> f64 {
    1.5
}
fn default_belief_noise() -> f64 {
    1.5
}
fn default_one() -> f64 {
    1.0
}
fn default_motive_log_sd() -> f64 {
    0.25
}
fn default_partisanship() -> [f64; 2] {
    [0.0, 1.0]
}

/// Cohort composition and parameter distributions.
///
/// Defaults: a 627 / 270 / 90 party split with
/// motivated updaters at `φ = 0.47` and priors centered on P(True) = 0.58.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub cells: Vec<CohortCell>,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default)]
    pub noise_sd: Option<f64>,
    /// Center of the prior P(True); logit-normal around it.
    #[serde(default = "default_prior_mean")]
    pub prior_mean: f64,
    #[serde(default = "default_prior_logit_sd")]
    pub prior_logit_sd: f64,
    #[serde(default = "default_median_bias")]
    pub median_bias: f64,
    #[serde(default = "default_belief_noise")]
    pub belief_noise: f64,
    #[serde(default = "default_one")]
    pub iqr_factor: f64,
    /// Multiplier on every topic's default motive magnitude.
    #[serde(default = "default_one")]
    pub motive_scale: f64,
    /// Sd of the lognormal spread of |m| around the topic magnitude.
    #[serde(default = "default_motive_log_sd")]
    pub motive_log_sd: f64,
    /// Range partisans' partisanship is drawn from; indifferent subjects get 0.
    #[serde(default = "default_partisanship")]
    pub partisanship: [f64; 2],
    #[serde(default)]
    pub motive_shape: MotiveShape,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig::with_cells(vec![
            CohortCell { party: Party::ProDem, updater: UpdaterSpec::Motivated, count: 627 },
            CohortCell { party: Party::ProRep, updater: UpdaterSpec::Motivated, count: 270 },
            CohortCell { party: Party::Indifferent, updater: UpdaterSpec::Motivated, count: 90 },
        ])
    }
}

impl PopulationConfig {
    /// Default parameters with the given cells.
    pub fn with_cells(cells: Vec<CohortCell>) -> Self {
        PopulationConfig {
            cells,
            phi: default_phi(),
            noise_sd: None,
            prior_mean: default_prior_mean(),
            prior_logit_sd: default_prior_logit_sd(),
            median_bias: default_median_bias(),
            belief_noise: default_belief_noise(),
            iqr_factor: 1.0,
            motive_scale: 1.0,
            motive_log_sd: default_motive_log_sd(),
            partisanship: default_partisanship(),
            motive_shape: MotiveShape::Linear,
        }
    }

    /// `n` partisans of one updater type split 64:27 between Pro-Dem and Pro-Rep.
    pub fn partisans(n: u32, updater: UpdaterSpec) -> Self {
        let dem = (f64::from(n) * 627.0 / 897.0).round() as u32;
        PopulationConfig::with_cells(vec![
            CohortCell { party: Party::ProDem, updater, count: dem },
            CohortCell { party: Party::ProRep, updater, count: n - dem },
        ])
    }

    pub fn size(&self) -> usize {
        self.cells.iter().map(|c| c.count as usize).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation(format!("population: {what}")))
            }
        };
        check(self.phi >= 0.0 && self.phi.is_finite(), "phi must be nonnegative")?;
        check(self.noise_sd.is_none_or(|s| s >= 0.0 && s.is_finite()), "noise_sd must be nonnegative")?;
        check(self.prior_mean > 0.0 && self.prior_mean < 1.0, "prior_mean must lie in (0, 1)")?;
        check(self.prior_logit_sd >= 0.0, "prior_logit_sd must be nonnegative")?;
        check(self.median_bias >= 0.0, "median_bias must be nonnegative")?;
        check(self.belief_noise > 0.0 && self.iqr_factor > 0.0, "belief_noise and iqr_factor must be positive")?;
        check(self.motive_scale >= 0.0 && self.motive_log_sd >= 0.0, "motive_scale and motive_log_sd must be nonnegative")?;
        let [lo, hi] = self.partisanship;
        check((0.0..=1.0).contains(&lo) && (lo..=1.0).contains(&hi), "partisanship range must lie in [0, 1]")?;
        for cell in &self.cells {
            if let UpdaterSpec::Generalized { zeta, kappa } = cell.updater {
                zeta.check("zeta", 0.0)?;
                kappa.check("kappa", 0.0)?;
            }
        }
        Ok(())
    }

    /// Draws the cohort. Agent ids follow cell order; each agent's parameters
    /// come from its own substream of `seed`.
    pub fn build(&self, topics: &TopicSet, seed: u64) -> Result<Vec<AgentSpec>> {
        self.validate()?;
        let prior_noise = Normal::new(0.0, self.prior_logit_sd).expect("validated sd");
        let motive_noise = Normal::new(0.0, self.motive_log_sd).expect("validated sd");
        let mut agents = Vec::with_capacity(self.size());
        for cell in &self.cells {
            for _ in 0..cell.count {
                let id = agents.len() as u32;
                let mut rng = substream(seed, Domain::Population, u64::from(id));
                let partisanship = match cell.party {
                    Party::Indifferent => 0.0,
                    _ => ParamValue::Uniform(self.partisanship).draw(&mut rng),
                };
                let updater = match cell.updater {
                    UpdaterSpec::Bayesian => Updater::Bayesian,
                    UpdaterSpec::Motivated => Updater::Motivated,
                    UpdaterSpec::Generalized { zeta, kappa } => Updater::Generalized {
                        zeta: zeta.draw(&mut rng),
                        kappa: kappa.draw(&mut rng),
                    },
                };
                let prior_true = logistic(logit(self.prior_mean) + prior_noise.sample(&mut rng));
                let mut motive_slopes = BTreeMap::new();
                for topic in topics.topics() {
                    let sign = motive_sign(cell.party, topic);
                    if sign == 0 || topic.motive_magnitude == 0.0 {
                        continue;
                    }
                    let magnitude = topic.motive_magnitude
                        * self.motive_scale
                        * (0.5 + partisanship)
                        * motive_noise.sample(&mut rng).exp();
                    motive_slopes.insert(topic.id.clone(), f64::from(sign) * magnitude);
                }
                let agent = AgentSpec {
                    id,
                    party: cell.party,
                    partisanship,
                    updater,
                    phi: self.phi,
                    noise_sd: self.noise_sd,
                    motive_slopes,
                    motive_shape: self.motive_shape,
                    prior_true,
                    median_bias: self.median_bias,
                    belief_noise: self.belief_noise,
                    iqr_factor: self.iqr_factor,
                };
                agent.validate()?;
                agents.push(agent);
            }
        }
        Ok(agents)
    }
}
