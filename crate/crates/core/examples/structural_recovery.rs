//! Closed-form estimates of priors, susceptibility and motives on a cohort
//! with known parameters.
//!
//! cargo run --release --example structural_recovery [phi]

use moreas::agents::{AssessmentScale, PopulationConfig, UpdaterSpec};
use moreas::inference::{self, StructuralOptions};
use moreas::simulator::{simulate, SimConfig};

fn main() -> moreas::Result<()> {
    let phi: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.47);
    let mut cohort = PopulationConfig::partisans(5000, UpdaterSpec::Motivated);
    cohort.phi = phi;
    let cfg = SimConfig {
        cohort,
        second_guess_fraction: 1.0,
        assessment_scale: AssessmentScale::Continuous,
        ..SimConfig::default()
    };
    let data = simulate(&cfg)?;
    let est = inference::estimate_structural(&data, &StructuralOptions::default())?;

    // With three neutral and thirteen assessed questions per subject the
    // estimate converges to (2/13) phi^2.
    let target = 2.0 / 13.0 * phi * phi;
    println!("phi_hat^2 = {:.5}, expected {target:.5}", est.phi_hat_sq);
    println!("phi_hat * sqrt(13/2) = {:.4} (true phi {phi})", est.phi_hat * (13.0f64 / 2.0).sqrt());

    let subjects = data.subject_index();
    let err: f64 = est
        .subjects
        .iter()
        .map(|s| (moreas::inference::clamp_logit(subjects[&s.subject_id].prior_true) - s.logit_p_hat).abs())
        .sum::<f64>()
        / est.subjects.len() as f64;
    println!("mean |logit p_hat - logit p| = {err:.4}");

    let rec = inference::motive_recovery(&est);
    println!(
        "{} motive estimates: corr {:.3} (winsorized {:.3}), sign agreement {:.3}",
        rec.rows, rec.correlation, rec.correlation_winsorized, rec.sign_agreement
    );
    // m_hat is scaled by phi / phi_hat, about sqrt(13/2) here.
    println!("\n{:<24} {:<12} {:>6} {:>10} {:>10}", "topic", "party", "n", "m_hat", "m_true");
    for t in inference::topic_motive_summary(&est) {
        let party = t.party.map_or("-", |p| p.as_str());
        println!("{:<24} {:<12} {:>6} {:>10.4} {:>10.4}", t.topic_id, party, t.n, t.mean_m_hat, t.mean_m_true);
    }
    Ok(())
}
