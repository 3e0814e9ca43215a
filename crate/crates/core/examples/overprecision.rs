//! Coverage of the elicited 50% intervals. Motivated priors shifted toward
//! the party's side cover the answer less often, partisans least of all.
//!
//! cargo run --release --example overprecision

use moreas::agents::{PopulationConfig, UpdaterSpec};
use moreas::inference;
use moreas::simulator::{simulate, SimConfig};

fn print(label: &str, rows: &[inference::CoverageRow]) {
    println!("{label}");
    for c in rows.iter().filter(|c| !c.partition.starts_with("topic:")) {
        println!("  {:<12} {:<9} n={:<6} {:.3} (se {:.3})", c.partition, c.group, c.n, c.rate, c.se);
    }
}

fn main() -> moreas::Result<()> {
    let motivated = simulate(&SimConfig::default())?;
    print("motivated cohort", &inference::ci_coverage(&motivated));

    let mut calibrated = PopulationConfig::partisans(2000, UpdaterSpec::Bayesian);
    calibrated.median_bias = 0.0;
    let bayes = simulate(&SimConfig { cohort: calibrated, ..SimConfig::default() })?;
    print("\ncalibrated cohort", &inference::ci_coverage(&bayes));

    let narrow = PopulationConfig { iqr_factor: 0.7, ..PopulationConfig::default() };
    let narrow = simulate(&SimConfig { cohort: narrow, ..SimConfig::default() })?;
    print("\nmotivated cohort with intervals 30% too narrow", &inference::ci_coverage(&narrow));
    Ok(())
}
