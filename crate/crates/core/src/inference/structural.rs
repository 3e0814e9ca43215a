//! Closed-form maximum-likelihood estimates of priors, susceptibility and motives.
//!
//! With `l = clamp_logit(a)` and `R` the conditional range implied by the
//! subject's bounds:
//!
//! * `logit p̂_i` is the mean of `l` over subject `i`'s neutral rounds;
//! * `φ̂² = Σ_i Σ_neutral (l − logit p̂_i)² / Σ_i Q_i`, where `Q_i` counts every
//!   assessed round of subject `i`;
//! * `m̂ = dir · (l − logit p̂_i) / (φ̂ · R)` on each non-neutral round, where
//!   `dir` is +1 for "greater than" messages and −1 for "less than".
//!
//! Because `Q_i` counts all rounds while only the neutral ones contribute
//! residuals, `φ̂²` converges to `((N − 1)/Q) · φ₀²` rather than `φ₀²`, and `m̂`
//! is identified up to the corresponding scale factor.

use std::collections::BTreeMap;

use super::{clamp_logit, correlation, winsorize};
use crate::agents::Party;
use crate::beliefs::BeliefDist;
use crate::error::{Error, Result};
use crate::protocol::{RoundRecord, TopicClass};
use crate::simulator::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralOptions {
    pub winsorize_level: f64,
    /// Use this value instead of `φ̂` when computing `m̂`.
    pub phi_override: Option<f64>,
    /// Return priors and `φ̂` without motive estimates when `φ̂ = 0`
    /// instead of failing.
    pub allow_degenerate: bool,
}

impl Default for StructuralOptions {
    fn default() -> Self {
        StructuralOptions { winsorize_level: 0.05, phi_override: None, allow_degenerate: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEstimate {
    pub subject_id: u32,
    pub logit_p_hat: f64,
    pub neutral_rounds: usize,
    pub assessed_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotiveEstimate {
    pub subject_id: u32,
    pub party: Option<Party>,
    pub topic_id: String,
    pub round: u8,
    pub m_hat: f64,
    pub m_hat_winsorized: f64,
    pub m_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRow {
    pub subject_id: u32,
    pub topic_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub phi_hat: f64,
    pub phi_hat_sq: f64,
    pub subjects: Vec<SubjectEstimate>,
    pub motives: Vec<MotiveEstimate>,
    pub dropped: Vec<DroppedRow>,
    /// Motive estimates were skipped because `φ̂ = 0`.
    pub motives_skipped: bool,
}

impl EstimateSet {
    pub fn subject(&self, id: u32) -> Option<&SubjectEstimate> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }
}

/// Runs the closed-form estimator over every assessed round.
pub fn estimate_structural(data: &Dataset, opts: &StructuralOptions) -> Result<EstimateSet> {
    let mut by_subject: BTreeMap<u32, Vec<&RoundRecord>> = BTreeMap::new();
    for r in data.rounds.iter().filter(|r| r.message_seen()) {
        by_subject.entry(r.agent_id).or_default().push(r);
    }
    let parties: BTreeMap<u32, Party> = data.subjects.iter().map(|s| (s.id, s.party)).collect();

    let mut subjects = Vec::new();
    let mut dropped = Vec::new();
    let (mut num, mut den) = (0.0, 0usize);
    for (&id, rows) in &by_subject {
        let neutral: Vec<f64> = rows
            .iter()
            .filter(|r| r.topic_class == TopicClass::Neutral)
            .map(|r| clamp_logit(r.assessment.expect("seen rows carry an assessment")))
            .collect();
        if neutral.is_empty() {
            log::warn!("subject {id}: no neutral assessments; excluded from estimation");
            dropped.push(DroppedRow { subject_id: id, topic_id: None, reason: "no neutral assessments".into() });
            continue;
        }
        let logit_p_hat = neutral.iter().sum::<f64>() / neutral.len() as f64;
        // Residuals taken around the first value so that identical assessments
        // give exactly zero.
        let shift = neutral.iter().map(|l| l - neutral[0]).sum::<f64>() / neutral.len() as f64;
        num += neutral.iter().map(|l| (l - neutral[0] - shift).powi(2)).sum::<f64>();
        den += rows.len();
        subjects.push(SubjectEstimate {
            subject_id: id,
            logit_p_hat,
            neutral_rounds: neutral.len(),
            assessed_rounds: rows.len(),
        });
    }
    if den == 0 {
        return Err(Error::Estimation("no subject has a neutral assessment".into()));
    }
    let phi_hat_sq = num / den as f64;
    let phi_hat = phi_hat_sq.sqrt();
    let phi = opts.phi_override.unwrap_or(phi_hat);

    let mut set = EstimateSet { phi_hat, phi_hat_sq, subjects, motives: Vec::new(), dropped, motives_skipped: false };
    if phi.is_nan() || phi <= 0.0 {
        if opts.allow_degenerate {
            log::warn!("phi_hat is 0: every neutral assessment equals its subject mean; motives not estimated");
            set.motives_skipped = true;
            return Ok(set);
        }
        return Err(Error::Estimation(
            "phi_hat is 0 (neutral assessments have no within-subject variation); motives are not identified".into(),
        ));
    }

    for s in &set.subjects {
        for r in &by_subject[&s.subject_id] {
            if r.topic_class == TopicClass::Neutral {
                continue;
            }
            let msg = r.message.expect("seen rows carry a message");
            let belief = match BeliefDist::from_bounds(r.guess, r.lower, r.upper) {
                Ok(b) => b,
                Err(_) => {
                    set.dropped.push(DroppedRow {
                        subject_id: s.subject_id,
                        topic_id: Some(r.topic_id.clone()),
                        reason: "upper bound equals lower bound".into(),
                    });
                    continue;
                }
            };
            let range = belief.conditional_range();
            let l = clamp_logit(r.assessment.expect("seen rows carry an assessment"));
            let m_hat = msg.sign() * (l - s.logit_p_hat) / (phi * range);
            set.motives.push(MotiveEstimate {
                subject_id: s.subject_id,
                party: parties.get(&s.subject_id).copied(),
                topic_id: r.topic_id.clone(),
                round: r.round,
                m_hat,
                m_hat_winsorized: m_hat,
                m_true: r.motive_true,
            });
        }
    }

    let mut by_topic: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, m) in set.motives.iter().enumerate() {
        by_topic.entry(m.topic_id.as_str()).or_default().push(i);
    }
    let mut clipped = vec![0.0; set.motives.len()];
    for idx in by_topic.values() {
        let values: Vec<f64> = idx.iter().map(|&i| set.motives[i].m_hat).collect();
        for (&i, w) in idx.iter().zip(winsorize(&values, opts.winsorize_level)) {
            clipped[i] = w;
        }
    }
    for (m, w) in set.motives.iter_mut().zip(clipped) {
        m.m_hat_winsorized = w;
    }
    Ok(set)
}

/// How well `m̂` tracks the simulator's true motive slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotiveRecovery {
    pub rows: usize,
    pub correlation: f64,
    pub correlation_winsorized: f64,
    /// Share of rows with nonzero true motive where the signs agree.
    pub sign_agreement: f64,
}

pub fn motive_recovery(est: &EstimateSet) -> MotiveRecovery {
    let m_hat: Vec<f64> = est.motives.iter().map(|m| m.m_hat).collect();
    let m_win: Vec<f64> = est.motives.iter().map(|m| m.m_hat_winsorized).collect();
    let m_true: Vec<f64> = est.motives.iter().map(|m| m.m_true).collect();
    let signed: Vec<&MotiveEstimate> = est.motives.iter().filter(|m| m.m_true != 0.0).collect();
    let agree = signed.iter().filter(|m| m.m_hat.signum() == m.m_true.signum() && m.m_hat != 0.0).count();
    MotiveRecovery {
        rows: est.motives.len(),
        correlation: correlation(&m_hat, &m_true),
        correlation_winsorized: correlation(&m_win, &m_true),
        sign_agreement: agree as f64 / signed.len().max(1) as f64,
    }
}

/// Mean winsorized `m̂` per topic and party.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMotive {
    pub topic_id: String,
    pub party: Option<Party>,
    pub n: usize,
    pub mean_m_hat: f64,
    pub se: f64,
    pub mean_m_true: f64,
}

pub fn topic_motive_summary(est: &EstimateSet) -> Vec<TopicMotive> {
    let mut groups: BTreeMap<(String, Option<Party>), Vec<&MotiveEstimate>> = BTreeMap::new();
    for m in &est.motives {
        groups.entry((m.topic_id.clone(), m.party)).or_default().push(m);
    }
    groups
        .into_iter()
        .map(|((topic_id, party), rows)| {
            let n = rows.len();
            let mean = rows.iter().map(|m| m.m_hat_winsorized).sum::<f64>() / n as f64;
            let var = if n > 1 {
                rows.iter().map(|m| (m.m_hat_winsorized - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            TopicMotive {
                topic_id,
                party,
                n,
                mean_m_hat: mean,
                se: (var / n as f64).sqrt(),
                mean_m_true: rows.iter().map(|m| m.m_true).sum::<f64>() / n as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::logistic;
    use crate::protocol::{MessageDirection, SourceKind};

    fn row(agent: u32, round: u8, class: TopicClass, a: f64) -> RoundRecord {
        RoundRecord {
            agent_id: agent,
            topic_id: format!("t{round}"),
            round,
            topic_class: class,
            pro_rep_direction: 0,
            theta: 10.0,
            guess: 5.0,
            lower: 0.0,
            upper: 10.0,
            source: Some(SourceKind::TrueNews),
            message: Some(MessageDirection::GreaterThan),
            assessment: Some(a),
            second_guess: None,
            wtp: None,
            bdm_revealed: None,
            bdm_bonus: None,
            score_guess: 0.0,
            score_lower: 0.0,
            score_upper: 0.0,
            score_assessment: None,
            score_second_guess: None,
            pro_party: None,
            polarizing: None,
            follow: None,
            ci_covers: false,
            motive_true: 0.0,
        }
    }

    #[test]
    fn closed_form_example() {
        let mut rounds: Vec<RoundRecord> = [0.2, 0.3, 0.4]
            .iter()
            .enumerate()
            .map(|(i, l)| row(0, i as u8 + 1, TopicClass::Neutral, logistic(*l)))
            .collect();
        for k in 4..=13 {
            rounds.push(row(0, k, TopicClass::Politicized, 0.5));
        }
        let data = Dataset { subjects: vec![], rounds };
        let est = estimate_structural(&data, &StructuralOptions::default()).unwrap();
        assert!((est.subjects[0].logit_p_hat - 0.3).abs() < 1e-12);
        assert!((est.phi_hat_sq - 0.02 / 13.0).abs() < 1e-12);
        assert_eq!(est.motives.len(), 10);
        // a = ½ on a "greater than" message: logit a − logit p̂ = −0.3.
        let r = BeliefDist::from_bounds(5.0, 0.0, 10.0).unwrap().conditional_range();
        let expect = -0.3 / (est.phi_hat * r);
        assert!((est.motives[0].m_hat - expect).abs() < 1e-9);
    }

    #[test]
    fn degenerate_phi() {
        let rounds = vec![row(0, 1, TopicClass::Neutral, 0.6), row(0, 2, TopicClass::Politicized, 0.7)];
        let data = Dataset { subjects: vec![], rounds };
        assert!(matches!(
            estimate_structural(&data, &StructuralOptions::default()),
            Err(Error::Estimation(_))
        ));
        let lenient = StructuralOptions { allow_degenerate: true, ..Default::default() };
        let est = estimate_structural(&data, &lenient).unwrap();
        assert!(est.motives_skipped && est.motives.is_empty());
        let forced = StructuralOptions { phi_override: Some(1.0), ..Default::default() };
        assert!(estimate_structural(&data, &forced).unwrap().motives[0].m_hat > 0.0);
    }

    #[test]
    fn drops_subjects_and_flat_bounds() {
        let mut flat = row(0, 3, TopicClass::Politicized, 0.7);
        flat.upper = flat.lower;
        let rounds = vec![
            row(0, 1, TopicClass::Neutral, 0.6),
            row(0, 2, TopicClass::Neutral, 0.7),
            flat,
            row(1, 1, TopicClass::Politicized, 0.7),
        ];
        let est = estimate_structural(&Dataset { subjects: vec![], rounds }, &StructuralOptions::default()).unwrap();
        assert_eq!(est.subjects.len(), 1);
        assert!(est.motives.is_empty());
        assert_eq!(est.dropped.len(), 2);
    }
}
