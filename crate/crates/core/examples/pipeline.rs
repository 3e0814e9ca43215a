//! Simulate, estimate and build the figures, writing everything to a directory.
//!
//! cargo run --release --example pipeline -- [OUT_DIR] [CONFIG_JSON]

use std::path::PathBuf;

use moreas::report::{self, EstimateOptions};
use moreas::simulator::{self, SimConfig};

fn main() -> moreas::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "moreas-out".into()));
    let cfg = match args.next() {
        Some(path) => SimConfig::load(path.as_ref())?,
        None => SimConfig::default(),
    };

    let data = simulator::simulate(&cfg)?;
    simulator::emit_csv(&data, &out)?;

    // Estimation reads back from disk, like a separate analysis step would.
    let data = simulator::read_dataset(&out)?;
    let outputs = report::estimate_all(&data, &EstimateOptions { logit: true, ..Default::default() })?;
    let mut written = report::write_estimates(&outputs, &out)?;
    let estimates = report::read_estimates(&out.join(report::ESTIMATES_FILE))?;
    let figures = report::build_figures(&data, &estimates)?;
    written.extend(report::write_figures(&figures, &out.join("figures"), true)?);

    println!("phi_hat = {:.4}", outputs.estimates.phi_hat);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
