//! Expected scores of the elicitation rules under a skewed belief: the
//! median, the quartiles and the rounded probability are the best reports.
//!
//! cargo run --example scoring_rules

use moreas::beliefs::BeliefDist;
use moreas::protocol::{self, SourceKind};

fn main() -> moreas::Result<()> {
    // Discretized normal belief about an answer with median 53 and IQR 12.
    let belief = BeliefDist::new(53.0, 12.0)?;
    let support: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
    let weights: Vec<f64> = support.iter().map(|&x| belief.cdf(x + 0.05) - belief.cdf(x - 0.05)).collect();
    let expected = |f: &dyn Fn(f64) -> f64| support.iter().zip(&weights).map(|(t, w)| w * f(*t)).sum::<f64>();
    let argmax = |f: &dyn Fn(f64, f64) -> f64| {
        support
            .iter()
            .map(|&r| (r, expected(&|t| f(r, t))))
            .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    };

    let (g, sg) = argmax(&protocol::score_guess);
    let (l, sl) = argmax(&protocol::score_lower);
    let (u, su) = argmax(&protocol::score_upper);
    println!("guess: best report {g:.1} (median {:.1}), expected score {sg:.2}", belief.median());
    println!("lower: best report {l:.1} (25th pct {:.1}), expected score {sl:.2}", belief.quantile(0.25)?);
    println!("upper: best report {u:.1} (75th pct {:.1}), expected score {su:.2}", belief.quantile(0.75)?);

    println!("\nassessment scores, belief P(True News) = 0.63:");
    for k in 0..protocol::GRID_POINTS {
        let a = protocol::grid_value(k);
        let s = 0.63 * protocol::quadratic_score(a, SourceKind::TrueNews) + 0.37 * protocol::quadratic_score(a, SourceKind::FakeNews);
        let mark = if a == protocol::round_to_grid(0.63) { "  <- best" } else { "" };
        println!("  a = {a:.1}: {s:6.2}{mark}");
    }
    println!("\nmean of 87 points -> bonus probability {:.3}", protocol::points_to_bonus_prob(87.0)?);
    Ok(())
}
