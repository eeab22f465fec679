//! Correlations mu(A ∩ T^-n A) through the transfer operator.
use cflab::transfer::{correlation_sequence, mu_a, refinement_study, LemmaReport, OperatorConfig};

fn main() -> cflab::Result<()> {
    let cfg = OperatorConfig::default();
    let mu2 = mu_a() * mu_a();
    println!("mu(A)^2 = {mu2:.15}");
    println!("{:>3} {:>20} {:>10} {:>12} {:>12}", "n", "mu(E_n)", "err", "r_n(1/2)", "bound");
    for est in correlation_sequence(20, &cfg)? {
        let lemma = LemmaReport::from_estimate(&est);
        println!(
            "{:>3} {:>20.15} {:>10.1e} {:>12.3e} {:>12.3e} {}",
            est.n,
            est.value,
            est.error.total(),
            lemma.r_n_half,
            lemma.bound,
            if lemma.pass { "ok" } else { "VIOLATED" }
        );
    }
    for (grid, v) in refinement_study(2, &[512, 1024, 2048], cfg.truncation)? {
        println!("N = {grid:>5}: mu(E_2) = {v:.15}");
    }
    Ok(())
}
