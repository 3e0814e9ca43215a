//! Willingness to pay for a message and the BDM mechanism that elicits it.
//!
//! cargo run --example willingness_to_pay

use moreas::agents::{self, PopulationConfig, UpdaterSpec};
use moreas::protocol::{self, Arm, BDM_LIMIT};
use moreas::simulator::{simulate, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> moreas::Result<()> {
    let topics = protocol::TopicSet::default_topics();
    let agents = PopulationConfig::partisans(6, UpdaterSpec::Motivated).build(&topics, 1)?;
    println!("{:>4} {:>7} {:>7} {:>8}", "id", "prior", "phi", "wtp");
    for a in &agents {
        println!("{:>4} {:>7.3} {:>7.3} {:>8.3}", a.id, a.prior_true, a.phi, agents::wtp_for_message(a));
    }

    // Payoff of each report against a fine grid of counter-draws, for a valuation of 4 points.
    let value = 4.0;
    let payoff = |report: f64| {
        let draws: Vec<f64> = (0..1000).map(|j| -BDM_LIMIT + (j as f64 + 0.5) * 0.05).collect();
        draws
            .iter()
            .map(|&d| {
                let o = protocol::resolve_bdm(report, d).expect("report in range");
                if o.revealed { value } else { o.bonus_points }
            })
            .sum::<f64>()
            / draws.len() as f64
    };
    println!("\nexpected payoff for a message worth {value} points:");
    for report in [-10.0, 0.0, 2.0, 4.0, 6.0, 10.0] {
        println!("  report {report:+5.1}: {:.4}", payoff(report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let o = protocol::run_bdm(value, &mut rng)?;
    println!("\none draw: {:.2} -> revealed {}, bonus {:.2}", o.draw, o.revealed, o.bonus_points);

    let data = simulate(&SimConfig { cohort: PopulationConfig::partisans(400, UpdaterSpec::Motivated), ..SimConfig::default() })?;
    let wtp: Vec<_> = data.rounds.iter().filter(|r| r.wtp.is_some()).collect();
    let hidden = wtp.iter().filter(|r| r.bdm_revealed == Some(false)).count();
    let wtp_subjects = data.subjects.iter().filter(|s| s.arm == Arm::Wtp).count();
    println!(
        "simulated: {wtp_subjects} subjects in the WTP arm, mean WTP {:.3}, {hidden} of {} messages hidden",
        wtp.iter().map(|r| r.wtp.unwrap()).sum::<f64>() / wtp.len() as f64,
        wtp.len()
    );
    Ok(())
}
