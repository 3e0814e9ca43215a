//! Bayesians ignore the message: every assessment is the prior, so the
//! Pro-Party coefficient is exactly zero.
//!
//! cargo run --example bayesian_null

use moreas::agents::{PopulationConfig, UpdaterSpec};
use moreas::inference::{self, Outcome};
use moreas::protocol::round_to_grid;
use moreas::simulator::{simulate, SimConfig};

fn main() -> moreas::Result<()> {
    let cfg = SimConfig {
        cohort: PopulationConfig::partisans(500, UpdaterSpec::Bayesian),
        ..SimConfig::default()
    };
    let data = simulate(&cfg)?;
    let subjects = data.subject_index();

    let seen: Vec<_> = data.rounds.iter().filter(|r| r.message_seen()).collect();
    let at_prior = seen
        .iter()
        .filter(|r| r.assessment == Some(round_to_grid(subjects[&r.agent_id].prior_true)))
        .count();
    println!("{at_prior} of {} assessments equal the rounded prior", seen.len());

    for (model, res) in inference::assessment_regressions(&data, Outcome::Level)? {
        for term in &res.terms {
            println!("{model:>22} {term:>14}  b = {:+.3e}  se = {:.3e}", res.coef(term).unwrap(), res.se(term).unwrap());
        }
    }
    Ok(())
}
