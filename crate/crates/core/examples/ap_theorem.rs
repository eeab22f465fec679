//! Subsampling a normal continued fraction along k, m+k, 2m+k, ...
//! destroys the frequency of [1,1] but not of single digits.
use cflab::experiment::{pair_target, theorem_experiment};
use cflab::transfer::mu_e1;

fn main() -> cflab::Result<()> {
    let n = 1_000_000;
    println!("mu(C_[1,1]) = {:.6}", mu_e1());
    for (m, k) in [(1, 1), (2, 1), (2, 3), (3, 1), (4, 2)] {
        let target = pair_target(m)?;
        let r = theorem_experiment(7, m, k, n)?;
        println!(
            "m={m} k={k}: [1,1] {:.6} vs mu(E_m) {:.6} [{:?}] z={:+.2}, [1] {:.6} z={:+.2}, {}",
            r.pair.empirical,
            target.value,
            target.provenance,
            r.pair.z_score,
            r.singles[0].empirical,
            r.singles[0].z_score,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
