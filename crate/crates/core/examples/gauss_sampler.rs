//! Drawing Gauss-distributed digits and checking their frequencies.
//!
//! Usage: gauss_sampler [seed] [count] [out.cfd]
use cflab::cf::{cylinder, DigitString};
use cflab::experiment::string_frequency;
use cflab::sampler::{sample_stream, GaussSampler};
use cflab::stream::write_with_metadata;

fn main() -> cflab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let count: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);

    let stream = sample_stream(seed, count);
    let n = count - 2;
    for s in [vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 1]] {
        let s = DigitString::new(s)?;
        let target = cylinder(&s).measure().to_f64();
        let freq = string_frequency(&stream, &s, n)?;
        let sigma = (target * (1.0 - target) / n as f64).sqrt();
        println!("{s:>6}: {freq:.6}  mu = {target:.6}  ({:+.2} sigma)", (freq - target) / sigma);
    }

    let mut checked = GaussSampler::new(seed).with_drift_check(10_000);
    checked.by_ref().take(100_000).for_each(drop);
    println!("max drift of the floating state vs exact convergents: {:.1e}", checked.max_drift().unwrap_or(0.0));

    if let Some(path) = args.get(3) {
        let side = write_with_metadata(&stream, path.as_ref())?;
        println!("wrote {path} and {}", side.display());
    }
    Ok(())
}
