//! Subjective belief distributions over a question's answer.
//!
//! Beliefs are normal, parameterized by the elicited median and interquartile
//! range. A normal belief keeps the elicited quartiles exact and makes the
//! median coincide with the mean, which is what the motive term needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::protocol::MessageDirection;

/// Normal belief over an answer, stored as (median, IQR).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefDist {
    median: f64,
    iqr: f64,
}

impl BeliefDist {
    /// Rejects non-finite medians and non-positive or non-finite widths.
    pub fn new(median: f64, iqr: f64) -> Result<Self> {
        if !median.is_finite() {
            return Err(Error::Domain(format!("belief median must be finite, got {median}")));
        }
        if !(iqr > 0.0 && iqr.is_finite()) {
            return Err(Error::Domain(format!("belief iqr must be positive, got {iqr}")));
        }
        Ok(BeliefDist { median, iqr })
    }

    /// Builds a belief from elicited lower and upper quartile bounds.
    pub fn from_bounds(median: f64, lower: f64, upper: f64) -> Result<Self> {
        BeliefDist::new(median, upper - lower)
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn iqr(&self) -> f64 {
        self.iqr
    }

    pub fn sd(&self) -> f64 {
        self.iqr / (2.0 * normal::z75())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.median) / self.sd())
    }

    /// Inverse CDF. `quantile(0.5)` returns the median exactly.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
        }
        if q == 0.5 {
            return Ok(self.median);
        }
        Ok(self.median + self.sd() * normal::quantile(q))
    }

    /// `E[θ | θ > median]`.
    pub fn mean_above(&self) -> f64 {
        self.median + self.sd() * half_normal_mean()
    }

    /// `E[θ | θ < median]`.
    pub fn mean_below(&self) -> f64 {
        self.median - self.sd() * half_normal_mean()
    }

    /// `E[θ | θ > median] − E[θ | θ < median]`, proportional to the IQR.
    pub fn conditional_range(&self) -> f64 {
        self.iqr * range_factor()
    }

    /// Median of the posterior mixture after a message that the agent believes
    /// is true with probability `a`.
    ///
    /// The posterior puts weight `a` on the half of the belief the message
    /// points to and `1 − a` on the other half. For a "greater than" message
    /// and `a ≥ ½` the median solves `F(x) = 1 − 1/(4a)`; for `a < ½` it solves
    /// `F(x) = 1/(4(1 − a))`. "Less than" mirrors around the prior median.
    pub fn revise_median(&self, msg: MessageDirection, a: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("assessment must lie in [0, 1], got {a}")));
        }
        let level = if a >= 0.5 {
            1.0 - 1.0 / (4.0 * a)
        } else {
            1.0 / (4.0 * (1.0 - a))
        };
        let shift = self.sd() * normal::quantile(level);
        Ok(match msg {
            MessageDirection::GreaterThan => self.median + shift,
            MessageDirection::LessThan => self.median - shift,
        })
    }
}

/// Mean of the standard half-normal, `√(2/π)`.
fn half_normal_mean() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt()
}

/// Ratio of the conditional range to the IQR for a normal belief,
/// `1 / (√π · erfc⁻¹(½))` ≈ 1.1830.
///
/// Uses `erfc⁻¹(½) = Φ⁻¹(¾)/√2`.
pub fn range_factor() -> f64 {
    let erfc_inv_half = normal::z75() / std::f64::consts::SQRT_2;
    1.0 / (std::f64::consts::PI.sqrt() * erfc_inv_half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    /// Unit-sd belief: iqr = 2·Φ⁻¹(¾).
    fn unit() -> BeliefDist {
        BeliefDist::new(0.0, 2.0 * 0.674_489_750_196_081_7).unwrap()
    }

    #[test]
    fn quantile_examples() {
        let b = BeliefDist::new(50.0, 10.0).unwrap();
        assert_eq!(b.quantile(0.5).unwrap(), 50.0);
        assert!((b.quantile(0.75).unwrap() - 55.0).abs() < 1e-12);
        let b = BeliefDist::new(0.0, 1.349).unwrap();
        // sd = 1.349 / 1.348979... ≈ 1.0000155; oracle value Φ⁻¹(0.975)·sd.
        let expected = 1.959_963_984_540_054 * 1.349 / (2.0 * 0.674_489_750_196_081_7);
        assert!((b.quantile(0.975).unwrap() - expected).abs() < 1e-12);
        assert!((b.quantile(0.975).unwrap() - 1.95997).abs() < 1e-4);
        assert!(b.quantile(0.0).is_err());
        assert!(b.quantile(1.0).is_err());
    }

    #[test]
    fn rejects_degenerate_width() {
        assert!(BeliefDist::new(1.0, 0.0).is_err());
        assert!(BeliefDist::new(1.0, -2.0).is_err());
        assert!(BeliefDist::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn range_factor_matches_footnote_constant() {
        assert!((range_factor() - 1.183).abs() < 5e-4);
        let b = BeliefDist::new(3.0, 10.0).unwrap();
        assert!((b.conditional_range() - 11.830).abs() < 5e-3);
        // Truncated-normal oracle: 2·sd·√(2/π) with sd = 1.
        assert!((unit().conditional_range() - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((unit().conditional_range() - 1.5958).abs() < 1e-4);
        assert!(BeliefDist::new(0.0, 1e-300).unwrap().conditional_range() < 1e-299);
    }

    #[test]
    fn range_factor_monte_carlo() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (mut above, mut n_above, mut below, mut n_below) = (0.0, 0usize, 0.0, 0usize);
        for _ in 0..1_000_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            if z > 0.0 {
                above += z;
                n_above += 1;
            } else {
                below += z;
                n_below += 1;
            }
        }
        let range = above / n_above as f64 - below / n_below as f64;
        // Unit sd ⇒ iqr = 2·z75.
        let ratio = range / (2.0 * normal::z75());
        assert!((ratio - range_factor()).abs() < 1e-2, "{ratio}");
    }

    /// Median of the posterior mixture found by bisection on its CDF.
    fn mixture_median_oracle(b: &BeliefDist, msg: MessageDirection, a: f64) -> f64 {
        let m = b.median();
        let upper_half = |x: f64| if x <= m { 0.0 } else { 2.0 * b.cdf(x) - 1.0 };
        let lower_half = |x: f64| if x >= m { 1.0 } else { 2.0 * b.cdf(x) };
        let g = |x: f64| match msg {
            MessageDirection::GreaterThan => a * upper_half(x) + (1.0 - a) * lower_half(x),
            MessageDirection::LessThan => a * lower_half(x) + (1.0 - a) * upper_half(x),
        };
        let (mut lo, mut hi) = (m - 20.0 * b.sd(), m + 20.0 * b.sd());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn revise_median_examples() {
        let b = BeliefDist::new(0.0, 1.349).unwrap();
        for msg in [MessageDirection::GreaterThan, MessageDirection::LessThan] {
            assert_eq!(b.revise_median(msg, 0.5).unwrap(), 0.0);
        }
        let full = b.revise_median(MessageDirection::GreaterThan, 1.0).unwrap();
        assert!((full - mixture_median_oracle(&b, MessageDirection::GreaterThan, 1.0)).abs() < 1e-9);
        assert!((full - 0.6745).abs() < 1e-3);
        let partial = b.revise_median(MessageDirection::GreaterThan, 0.75).unwrap();
        assert!((partial - mixture_median_oracle(&b, MessageDirection::GreaterThan, 0.75)).abs() < 1e-9);
        assert!((partial - 0.4307).abs() < 1e-3);
        assert!(b.revise_median(MessageDirection::LessThan, 1.5).is_err());
        assert!(b.revise_median(MessageDirection::LessThan, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn revise_median_matches_mixture_oracle(
            median in -100.0f64..100.0, iqr in 0.01f64..50.0, a in 0.0f64..=1.0, less in any::<bool>()
        ) {
            let b = BeliefDist::new(median, iqr).unwrap();
            let msg = if less { MessageDirection::LessThan } else { MessageDirection::GreaterThan };
            let got = b.revise_median(msg, a).unwrap();
            let oracle = mixture_median_oracle(&b, msg, a);
            prop_assert!((got - oracle).abs() < 1e-7 * (1.0 + iqr));
        }

        #[test]
        fn revise_median_is_symmetric(median in -100.0f64..100.0, iqr in 0.01f64..50.0, a in 0.0f64..=1.0) {
            let b = BeliefDist::new(median, iqr).unwrap();
            let up = b.revise_median(MessageDirection::GreaterThan, a).unwrap() - median;
            let down = b.revise_median(MessageDirection::LessThan, a).unwrap() - median;
            prop_assert!((up + down).abs() < 1e-9);
        }

        #[test]
        fn revise_median_sign_and_monotonicity(iqr in 0.01f64..50.0, a in 0.0f64..0.99, da in 0.001f64..0.01) {
            let b = BeliefDist::new(10.0, iqr).unwrap();
            let lo = b.revise_median(MessageDirection::GreaterThan, a).unwrap();
            let hi = b.revise_median(MessageDirection::GreaterThan, (a + da).min(1.0)).unwrap();
            prop_assert!(hi > lo);
            let shift = lo - b.median();
            let expected = if a > 0.5 { 1.0 } else if a < 0.5 { -1.0 } else { 0.0 };
            prop_assert_eq!(if shift > 0.0 { 1.0 } else if shift < 0.0 { -1.0 } else { 0.0 }, expected);
        }

        #[test]
        fn quartiles_recover_iqr(median in -1e3f64..1e3, iqr in 1e-3f64..1e3) {
            let b = BeliefDist::new(median, iqr).unwrap();
            let width = b.quantile(0.75).unwrap() - b.quantile(0.25).unwrap();
            prop_assert!((width - iqr).abs() <= 1e-9 * iqr.max(median.abs()));
            prop_assert_eq!(b.quantile(0.5).unwrap(), median);
            prop_assert!(b.sd() > 0.0);
        }
    }
}
