//! Second guesses follow the message exactly when the assessment exceeds
//! one half, so controlling for the assessment removes the effect of
//! Pro-Party and polarizing news on following.
//!
//! cargo run --release --example polarization

use moreas::inference;
use moreas::simulator::{simulate, SimConfig};

fn main() -> moreas::Result<()> {
    let data = simulate(&SimConfig::default())?;
    let rows: Vec<_> = data.rounds.iter().filter(|r| r.follow.is_some()).collect();
    let mut counts = [0usize; 3];
    for r in &rows {
        counts[(r.follow.unwrap() + 1) as usize] += 1;
    }
    println!("{} second guesses: against {}, unchanged {}, with {}", rows.len(), counts[0], counts[1], counts[2]);
    let polarizing = rows.iter().filter(|r| r.polarizing == Some(true)).count();
    println!("{polarizing} after polarizing news");

    for (model, res) in inference::polarization_regression(&data)? {
        let terms: Vec<String> = res
            .terms
            .iter()
            .map(|t| format!("{t} {:+.4} (se {:.4})", res.coef(t).unwrap(), res.se(t).unwrap()))
            .collect();
        println!("{model:<22} n={:<6} {}", res.n, terms.join(", "));
    }
    Ok(())
}
