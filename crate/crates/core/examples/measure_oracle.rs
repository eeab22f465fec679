//! Certified enclosures of mu(A ∩ T^-n A) by cylinder enumeration.
//!
//! Usage: measure_oracle [n_max] [golden_out.json]
//! The golden file, if requested, records the n = 2 enclosure at D = 10^5.
use std::time::Instant;

use cflab::oracle::{compare_en_e1, en_exact, max_cutoff, within_lemma_band, DEFAULT_CUTOFF};

fn main() -> cflab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n_max: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    for n in 1..=n_max {
        let d = max_cutoff(n, DEFAULT_CUTOFF);
        let start = Instant::now();
        let iv = en_exact(n, d)?;
        println!(
            "n={n} D={d:>6} [{:.15}, {:.15}] width {:.2e} crude {:.2e} leaves {:>10} band {} ({:.1?})",
            iv.lower_f64(),
            iv.upper_f64(),
            iv.width(),
            iv.crude_width(),
            iv.leaves,
            if within_lemma_band(&iv) { "ok" } else { "OUT" },
            start.elapsed()
        );
        if n == 2 {
            if let Some(path) = args.get(2) {
                iv.golden().write(path)?;
                println!("wrote {path}");
            }
        }
    }
    for n in 2..=n_max.min(4) {
        let c = compare_en_e1(n)?;
        println!("mu(E_{n}) vs mu(E_1): {:?} (cutoffs {:?})", c.ordering, c.cutoffs_tried);
    }
    Ok(())
}
