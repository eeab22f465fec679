//! Sampling a continued-fraction expansion along an arithmetic progression.
//!
//! For a Gauss-normal `x`, the subsequence `a_k, a_{m+k}, a_{2m+k}, ...`
//! contains the string `[1,1]` with frequency `mu(A ∩ T^-m A)`, which differs
//! from `mu(C_[1,1])` for every `m >= 2`. Single digits keep their Gauss
//! frequencies.

use std::path::Path;

use serde::Serialize;

use crate::cf::{cylinder, DigitString};
use crate::error::{CfError, Result};
use crate::oracle;
use crate::sampler::{sample_stream, PRNG_ALGORITHM};
use crate::skew::{marker_trajectory, MarkerFamily};
use crate::stream::DigitStream;
use crate::transfer::{self, lemma_bound, mu_a, mu_e1, OperatorConfig};

/// Positions `k, m + k, 2m + k, ...` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct APSchedule {
    pub m: usize,
    pub k: usize,
}

impl APSchedule {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(CfError::domain(format!("schedule needs m >= 1 and k >= 1, got m={m}, k={k}")));
        }
        Ok(APSchedule { m, k })
    }

    /// `m >= 2`: the subsequence is not normal.
    pub fn is_theorem_regime(&self) -> bool {
        self.m >= 2
    }

    /// Digits needed to take `n` samples.
    pub fn required_len(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            (n - 1) * self.m + self.k
        }
    }
}

pub fn ap_subsample(stream: &DigitStream, schedule: APSchedule, n: usize) -> Result<DigitStream> {
    let needed = schedule.required_len(n);
    if stream.len() < needed {
        return Err(CfError::InsufficientDigits {
            needed,
            available: stream.len(),
        });
    }
    let d = stream.digits();
    DigitStream::from_digits((0..n).map(|i| d[i * schedule.m + schedule.k - 1]).collect())
}

/// Overlapping occurrences of `s` starting at positions `0..n`, divided by `n`.
pub fn string_frequency(stream: &DigitStream, s: &DigitString, n: usize) -> Result<f64> {
    Ok(string_count(stream, s, n)? as f64 / n as f64)
}

pub fn string_count(stream: &DigitStream, s: &DigitString, n: usize) -> Result<u64> {
    if n == 0 {
        return Err(CfError::domain("frequency over zero positions"));
    }
    if s.is_empty() {
        return Err(CfError::domain("frequency of the empty string"));
    }
    let needed = n + s.len() - 1;
    if stream.len() < needed {
        return Err(CfError::InsufficientDigits {
            needed,
            available: stream.len(),
        });
    }
    Ok(stream.digits()[..needed]
        .windows(s.len())
        .filter(|w| *w == s.digits())
        .count() as u64)
}

/// Count of `i = 1..=n` with `a_{(i-1)m+k} = a_{im+k} = 1`, read straight from
/// the original stream.
pub fn pair_count_direct(stream: &DigitStream, schedule: APSchedule, n: usize) -> Result<u64> {
    let needed = n * schedule.m + schedule.k;
    if stream.len() < needed {
        return Err(CfError::InsufficientDigits {
            needed,
            available: stream.len(),
        });
    }
    let a = |pos: usize| stream.digits()[pos - 1];
    Ok((1..=n)
        .filter(|&i| a((i - 1) * schedule.m + schedule.k) == 1 && a(i * schedule.m + schedule.k) == 1)
        .count() as u64)
}

/// `m` times the visit frequency of `T~^j (x, 1)`, `j < m n`, to
/// `(E_m, k mod m)` under the rotation family on `m` markers.
pub fn pair_frequency_skew(stream: &DigitStream, schedule: APSchedule, n: usize) -> Result<f64> {
    let m = schedule.m;
    let steps = m * n;
    let needed = steps + m;
    if stream.len() < needed {
        return Err(CfError::InsufficientDigits {
            needed,
            available: stream.len(),
        });
    }
    let family = MarkerFamily::rotation(m)?;
    let markers = marker_trajectory(stream, &family, 1, steps)?;
    let target_marker = (schedule.k - 1) % m + 1;
    let d = stream.digits();
    let visits = (0..steps)
        .filter(|&j| markers[j] == target_marker && d[j] == 1 && d[j + m] == 1)
        .count();
    Ok(m as f64 * visits as f64 / steps as f64)
}

/// The three ways of counting `[1,1]` along the progression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountingRoutes {
    pub subsample: f64,
    pub direct: f64,
    pub skew: f64,
    /// `2 / n`.
    pub tolerance: f64,
}

impl CountingRoutes {
    pub fn agree(&self) -> bool {
        self.subsample == self.direct && (self.skew - self.subsample).abs() <= self.tolerance
    }
}

pub fn counting_routes(stream: &DigitStream, schedule: APSchedule, n: usize) -> Result<CountingRoutes> {
    let sub = ap_subsample(stream, schedule, n + 1)?;
    let pair = DigitString::new(vec![1, 1])?;
    Ok(CountingRoutes {
        subsample: string_frequency(&sub, &pair, n)?,
        direct: pair_count_direct(stream, schedule, n)? as f64 / n as f64,
        skew: pair_frequency_skew(stream, schedule, n)?,
        tolerance: 2.0 / n as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Oracle,
    Operator,
}

/// A reference value with its uncertainty and where it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Target {
    pub value: f64,
    /// Half-width of the certified interval, or the operator error budget.
    pub error: f64,
    pub provenance: Provenance,
}

/// Largest `m` whose `mu(E_m)` is taken from the cylinder oracle.
pub const ORACLE_MAX_M: usize = 3;

/// `mu(E_m)`: closed form for `m = 1`, certified oracle for `m <= 3`,
/// transfer operator beyond.
pub fn pair_target(m: usize) -> Result<Target> {
    if m == 0 {
        return Err(CfError::domain("m must be >= 1"));
    }
    if m == 1 {
        return Ok(Target {
            value: mu_e1(),
            error: 0.0,
            provenance: Provenance::Exact,
        });
    }
    if m <= ORACLE_MAX_M {
        let d = if m == 2 { oracle::DEFAULT_CUTOFF } else { 20_000 };
        let iv = oracle::en_exact(m as u32, d)?;
        return Ok(Target {
            value: iv.midpoint(),
            error: iv.width() / 2.0,
            provenance: Provenance::Oracle,
        });
    }
    let est = transfer::correlation_via_operator(m as u32, &OperatorConfig::default())?;
    Ok(Target {
        value: est.value,
        error: est.error.total(),
        provenance: Provenance::Operator,
    })
}

/// Guaranteed distance `mu(E_m) - mu(E_1)` implied by the correlation bound.
pub fn separation_lower_bound(m: usize) -> f64 {
    let mu = mu_a();
    mu * (mu - lemma_bound(m as u32)) - mu_e1()
}

/// Stderr widening applied to `[1,1]`, whose indicators are dependent.
pub const PAIR_WIDENING: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub string: String,
    pub empirical: f64,
    pub target: f64,
    pub provenance: Provenance,
    pub stderr: f64,
    pub z_score: f64,
}

impl FrequencyRow {
    fn new(string: &DigitString, count: u64, n: usize, target: Target, widening: f64) -> Self {
        let empirical = count as f64 / n as f64;
        let p = target.value;
        let stderr = widening * (p * (1.0 - p) / n as f64).sqrt();
        FrequencyRow {
            string: string.to_string(),
            empirical,
            target: p,
            provenance: target.provenance,
            stderr,
            z_score: (empirical - p) / stderr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub seed: u64,
    pub schedule: APSchedule,
    /// Number of window positions counted.
    pub n: usize,
    pub digits_sampled: usize,
    /// `[1,1]` against `mu(E_m)`.
    pub pair: FrequencyRow,
    /// `|freq([1,1]) - mu(C_[1,1])|`.
    pub separation: f64,
    pub separation_required: f64,
    /// Single digits against their Gauss measure.
    pub singles: Vec<FrequencyRow>,
    pub routes: CountingRoutes,
    pub pass: bool,
}

/// Number of single digits reported.
pub const SINGLE_DIGITS: u64 = 5;

impl FrequencyReport {
    /// The theorem direction for `m >= 2`: `[1,1]` is at least the guaranteed
    /// distance from `mu(C_[1,1])` and consistent with `mu(E_m)`. For `m = 1`,
    /// agreement with `mu(C_[1,1])`.
    fn evaluate(&self) -> bool {
        let consistent = self.pair.z_score.abs() <= 4.0;
        if self.schedule.m >= 2 {
            consistent && self.separation >= self.separation_required
        } else {
            consistent
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| CfError::io(path, e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(&self.pair)?;
        for r in &self.singles {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CfError::io(path, e))
    }
}

/// Builds the report for an already materialized stream.
pub fn frequency_report(stream: &DigitStream, seed: u64, schedule: APSchedule, n: usize) -> Result<FrequencyReport> {
    let sub = ap_subsample(stream, schedule, n + 1)?;
    let pair = DigitString::new(vec![1, 1])?;
    let pair_row = FrequencyRow::new(&pair, string_count(&sub, &pair, n)?, n, pair_target(schedule.m)?, PAIR_WIDENING);
    let singles = (1..=SINGLE_DIGITS)
        .map(|d| {
            let s = DigitString::new(vec![d])?;
            let target = Target {
                value: cylinder(&s).measure().to_f64(),
                error: 0.0,
                provenance: Provenance::Exact,
            };
            Ok(FrequencyRow::new(&s, string_count(&sub, &s, n)?, n, target, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let separation = (pair_row.empirical - mu_e1()).abs();
    let mut report = FrequencyReport {
        seed,
        schedule,
        n,
        digits_sampled: stream.len(),
        pair: pair_row,
        separation,
        separation_required: if schedule.m >= 2 { separation_lower_bound(schedule.m) } else { 0.0 },
        singles,
        routes: counting_routes(stream, schedule, n)?,
        pass: false,
    };
    report.pass = report.evaluate();
    Ok(report)
}

/// Digits sampled for an experiment with `n` window positions.
pub fn digits_needed(schedule: APSchedule, n: usize) -> usize {
    n * schedule.m + schedule.k.max(schedule.m)
}

/// Samples a Gauss-distributed stream from `seed` and counts along the
/// progression.
pub fn theorem_experiment(seed: u64, m: usize, k: usize, n: usize) -> Result<FrequencyReport> {
    let schedule = APSchedule::new(m, k)?;
    if n == 0 {
        return Err(CfError::domain("n must be >= 1"));
    }
    let stream = sample_stream(seed, digits_needed(schedule, n));
    frequency_report(&stream, seed, schedule, n)
}

/// Reproduction record of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentManifest {
    pub seed: u64,
    pub prng_algorithm: String,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub digits_sampled: usize,
    pub targets: Vec<(String, f64)>,
    pub provenance: Vec<(String, Provenance)>,
    pub tool_version: String,
}

impl ExperimentManifest {
    pub fn for_report(r: &FrequencyReport) -> Self {
        let rows = std::iter::once(&r.pair).chain(&r.singles);
        ExperimentManifest {
            seed: r.seed,
            prng_algorithm: PRNG_ALGORITHM.to_string(),
            m: r.schedule.m,
            k: r.schedule.k,
            n: r.n,
            digits_sampled: r.digits_sampled,
            targets: rows.clone().map(|row| (row.string.clone(), row.target)).collect(),
            provenance: rows.map(|row| (row.string.clone(), row.provenance)).collect(),
            tool_version: crate::TOOL_VERSION.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naturals(n: u64) -> DigitStream {
        DigitStream::from_digits((1..=n).collect()).unwrap()
    }

    #[test]
    fn subsample_indexing() {
        let s = naturals(20);
        let sub = |m, k, n| ap_subsample(&s, APSchedule::new(m, k).unwrap(), n).unwrap().into_digits();
        assert_eq!(sub(2, 1, 5), vec![1, 3, 5, 7, 9]);
        assert_eq!(sub(1, 1, 20), s.digits().to_vec());
        assert_eq!(sub(3, 2, 4), vec![2, 5, 8, 11]);
        match ap_subsample(&s, APSchedule::new(3, 2).unwrap(), 8) {
            Err(CfError::InsufficientDigits { needed, available }) => assert_eq!((needed, available), (23, 20)),
            other => panic!("{other:?}"),
        }
        assert!(APSchedule::new(0, 1).is_err());
    }

    #[test]
    fn frequencies_of_periodic_streams() {
        let pair = DigitString::new(vec![1, 1]).unwrap();
        let ones = DigitStream::periodic(&[1], 101).unwrap();
        assert_eq!(string_frequency(&ones, &pair, 100).unwrap(), 1.0);
        let alt = DigitStream::periodic(&[1, 2], 101).unwrap();
        assert_eq!(string_frequency(&alt, &pair, 100).unwrap(), 0.0);
        assert!(string_frequency(&alt, &pair, 0).is_err());
    }

    #[test]
    fn single_digit_frequencies_sum_to_one() {
        let s = sample_stream(4, 10_000);
        let total: u64 = s
            .digits()
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<u64>>()
            .into_iter()
            .map(|d| string_count(&s, &DigitString::new(vec![d]).unwrap(), 10_000).unwrap())
            .sum();
        assert_eq!(total, 10_000);
    }

    #[test]
    fn counting_routes_agree() {
        let s = sample_stream(8, 40_000);
        for (m, k) in [(1, 1), (2, 1), (2, 2), (3, 2), (2, 5), (4, 3)] {
            let r = counting_routes(&s, APSchedule::new(m, k).unwrap(), 5000).unwrap();
            assert!(r.agree(), "m={m} k={k}: {r:?}");
        }
    }

    #[test]
    fn separation_bound_for_m2() {
        let g = separation_lower_bound(2);
        assert!(g > 0.0097 && g < 0.0098, "{g}");
    }

    #[test]
    fn pair_target_provenance() {
        assert_eq!(pair_target(1).unwrap().provenance, Provenance::Exact);
        let t2 = pair_target(2).unwrap();
        assert_eq!(t2.provenance, Provenance::Oracle);
        assert!((t2.value - 0.178_578_869_085_368_8).abs() < 1e-9);
    }

    #[test]
    fn manifest_lists_every_target() {
        let r = theorem_experiment(1, 2, 1, 2000).unwrap();
        let man = ExperimentManifest::for_report(&r);
        assert_eq!(man.targets.len(), 1 + SINGLE_DIGITS as usize);
        assert_eq!(man.provenance[0], ("[1,1]".to_string(), Provenance::Oracle));
        assert!(serde_json::to_string(&man).unwrap().contains("\"seed\":1"));
    }
}
