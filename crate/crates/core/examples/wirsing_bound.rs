//! Wirsing's operator: the contraction U a <= a/2 and the decay of g_n = f_n'.
use cflab::transfer::{derivative_decay_ratios, wirsing_contraction_check, OperatorConfig};

fn main() -> cflab::Result<()> {
    let cfg = OperatorConfig::default();
    let check = wirsing_contraction_check(&cfg)?;
    println!("max |Ub - 1/(2(2+x)^2)| = {:.2e}", check.max_ub_error);
    println!("min (a/2 - Ua)          = {:.4e}", check.min_margin);
    println!("series tail bound       = {:.1e}", check.tail_bound);
    println!("contraction holds: {}", check.pass);

    println!("max_x |g_n(x)| / (2^-(n-1) |g_1(x)|):");
    for (i, r) in derivative_decay_ratios(8, &cfg.with_grid(512))?.iter().enumerate() {
        println!("  n = {}: {r:.4}", i + 1);
    }
    Ok(())
}
