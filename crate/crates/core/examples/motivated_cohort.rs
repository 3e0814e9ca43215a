//! The default motivated cohort: Pro-Party news is trusted more than
//! Anti-Party news, and Fake News is trusted more than True News on
//! politicized topics only.
//!
//! cargo run --release --example motivated_cohort

use moreas::inference::{self, Category, Outcome};
use moreas::protocol::SourceKind;
use moreas::simulator::{simulate, SimConfig};

fn main() -> moreas::Result<()> {
    let data = simulate(&SimConfig::default())?;
    println!("{} subjects, {} rounds", data.subjects.len(), data.rounds.len());

    let stats = inference::gap_stats(&data, Outcome::Level)?;
    for cat in [Category::ProParty, Category::Neutral, Category::AntiParty] {
        let true_news = stats.cell(cat, SourceKind::TrueNews).map_or(f64::NAN, |c| c.mean);
        let fake_news = stats.cell(cat, SourceKind::FakeNews).map_or(f64::NAN, |c| c.mean);
        println!("{:>10}: demeaned {:+.3} (true {:+.3}, fake {:+.3})", cat.as_str(), stats.category_mean(cat), true_news, fake_news);
    }
    if let Some(g) = stats.pro_anti {
        println!("raw Pro - Anti = {:.3} (se {:.3}, t {:.1})", g.estimate, g.se, g.t);
    }
    println!(
        "demeaned Fake - True: politicized {:+.3}, neutral {:+.3}",
        stats.demeaned_fake_minus_true_politicized, stats.demeaned_fake_minus_true_neutral
    );

    let (pro, anti) = inference::pro_anti_assessments(&data);
    let fosd = inference::fosd_check(&pro, &anti);
    println!("\n   a   F(pro)  F(anti)");
    for (k, (a, b)) in fosd.cdf_a.iter().zip(&fosd.cdf_b).enumerate() {
        println!("{:.1}  {a:7.3}  {b:7.3}", k as f64 / 10.0);
    }
    println!("Pro first-order dominates Anti: {}", fosd.a_dominates);

    for (model, res) in inference::assessment_regressions(&data, Outcome::Logit)? {
        let term = &res.terms[0];
        println!("{model:>22} (logit): {term} = {:+.3} (t {:.1})", res.coef(term).unwrap(), res.t(term).unwrap());
    }
    Ok(())
}
