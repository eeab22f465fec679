//! Markers driven by the digits of a Gauss-typical point.
use std::collections::BTreeMap;

use cflab::sampler::sample_stream;
use cflab::skew::{equidistribution_report, is_transitive, MarkerFamily};

fn main() -> cflab::Result<()> {
    let swap_on_one = MarkerFamily::new(2, vec![vec![2, 1], vec![1, 2]], BTreeMap::from([(1, 0)]), 1)?;
    let families = [
        ("rotation m=3", MarkerFamily::rotation(3)?),
        ("identity m=2", MarkerFamily::identity(2)?),
        ("swap on digit 1", swap_on_one),
    ];
    for (name, f) in &families {
        let t = is_transitive(f, 16);
        println!("{name}: transitive = {}", t.transitive);
        for ((a, b), w) in &t.witnesses {
            println!("    {a} -> {b} via digits {w:?}");
        }
    }

    let n = 1_000_000;
    let stream = sample_stream(11, n + 2);
    let report = equidistribution_report(&stream, &MarkerFamily::rotation(3)?, 1, 2, 2, n)?;
    println!("rotation m=3, {n} steps from (x, 1):");
    for r in &report.rows {
        println!("  {:>6} marker {}: {:.6} vs {:.6} ({:+.2} sigma)", r.string, r.marker, r.empirical, r.target, r.z_score);
    }
    Ok(())
}
