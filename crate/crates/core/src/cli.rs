//! The `cflab` command line.
//!
//! Exit codes: 0 success, 1 a reported check failed, 2 usage error or an
//! undecided comparison in `measure`, 3 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cf::cylinder;
use crate::error::{CfError, Result};
use crate::experiment::{self, APSchedule, ExperimentManifest};
use crate::oracle::{self, EnOrdering};
use crate::sampler::sample_stream;
use crate::skew::{equidistribution_report, is_transitive, MarkerFamily};
use crate::stream::{write_with_metadata, DigitStream};
use crate::transfer::{self, LemmaReport, OperatorConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cflab", version, about = "Continued-fraction normality lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Operator,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `k -> k + 1 mod m` for every digit.
    Rotation,
    Identity,
    /// Digit 1 rotates, every other digit fixes the marker.
    RotateOnOne,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certified or operator values of mu(A ∩ T^-n A).
    Measure {
        /// One or more lags n >= 1.
        #[arg(long, num_args = 1.., required = true, value_parser = clap::value_parser!(u32).range(1..))]
        n: Vec<u32>,
        /// Interior digit cutoff D for the oracle.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        cutoff: u64,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// JSON output, or CSV when the name ends in `.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a Gauss-distributed digit stream (CFD1 plus JSON sidecar).
    Sample {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency of [1,1] along the progression k, m+k, 2m+k, ...
    Theorem {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Total digits to sample.
        #[arg(long, default_value_t = 2_000_001)]
        digits: usize,
        /// Output prefix: writes `<out>.json`, `<out>.csv`, `<out>.manifest.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlation bound for n = 1..n_max and the contraction of Wirsing's operator.
    Wirsing {
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
        n_max: u32,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        truncation: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transitivity and equidistribution of the marker skew product.
    Skew {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, value_enum, default_value_t = FamilyKind::Rotation)]
        family: FamilyKind,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        start_marker: usize,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        #[arg(long, default_value_t = 3)]
        max_digit: u64,
        /// CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frequency table for a CFD1 stream file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        #[arg(long, default_value_t = 5)]
        max_digit: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    fn start(subcommand: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            tool_version: crate::TOOL_VERSION.to_string(),
            started_utc: chrono::Utc::now().to_rfc3339(),
            finished_utc: String::new(),
            outputs: Vec::new(),
        }
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        self.finished_utc = chrono::Utc::now().to_rfc3339();
        write_json(path, &self)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| CfError::io(path, e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Honors `CFLAB_THREADS`; later calls are no-ops.
pub fn configure_threads() {
    if let Some(n) = std::env::var("CFLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Measure { n, cutoff, method, out } => cmd_measure(&n, cutoff, method, out.as_deref()),
        Command::Sample { seed, count, out } => cmd_sample(seed, count, &out),
        Command::Theorem { seed, m, k, digits, out } => cmd_theorem(seed, m as usize, k as usize, digits, out.as_deref()),
        Command::Wirsing {
            n_max,
            grid,
            truncation,
            out,
        } => cmd_wirsing(n_max, grid, truncation, out.as_deref()),
        Command::Skew {
            m,
            family,
            seed,
            count,
            start_marker,
            max_len,
            max_digit,
            out,
        } => cmd_skew(m, family, seed, count, start_marker, max_len, max_digit, out.as_deref()),
        Command::Stats {
            input,
            max_len,
            max_digit,
            out,
        } => cmd_stats(&input, max_len, max_digit, out.as_deref()),
    }
}

#[derive(Debug, Serialize)]
pub struct MeasureRow {
    pub n: u32,
    pub method: String,
    pub provenance: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub cutoff: Option<u64>,
    pub vs_e1: Option<EnOrdering>,
}

pub fn cmd_measure(ns: &[u32], cutoff: u64, method: Method, out: Option<&Path>) -> Result<i32> {
    let mut rows = Vec::new();
    let mut undecided = false;
    let (e1_lo, e1_hi) = oracle::e1_bounds();
    let n_max = *ns.iter().max().expect("clap requires at least one n");
    let operator = if method != Method::Oracle {
        Some(transfer::correlation_sequence(n_max, &OperatorConfig::default())?)
    } else {
        None
    };
    for &n in ns {
        if method != Method::Operator {
            let iv = oracle::en_exact(n, cutoff)?;
            let ordering = if n == 1 {
                EnOrdering::Equal
            } else if iv.lower > e1_hi {
                EnOrdering::Greater
            } else if iv.upper < e1_lo {
                EnOrdering::Less
            } else {
                undecided = true;
                EnOrdering::Undecided
            };
            rows.push(MeasureRow {
                n,
                method: "oracle".into(),
                provenance: if n == 1 { "exact" } else { "oracle" }.into(),
                value: iv.midpoint(),
                lower: iv.lower_f64(),
                upper: iv.upper_f64(),
                cutoff: Some(cutoff),
                vs_e1: Some(ordering),
            });
        }
        if let Some(seq) = &operator {
            let est = seq[n as usize - 1];
            let err = est.error.total();
            rows.push(MeasureRow {
                n,
                method: "operator".into(),
                provenance: "operator".into(),
                value: est.value,
                lower: est.value - err,
                upper: est.value + err,
                cutoff: None,
                vs_e1: None,
            });
        }
    }
    println!("{:>3} {:>9} {:>20} {:>20} {:>20} {:>10}", "n", "method", "value", "lower", "upper", "vs E_1");
    for r in &rows {
        println!(
            "{:>3} {:>9} {:>20.15} {:>20.15} {:>20.15} {:>10}",
            r.n,
            r.method,
            r.value,
            r.lower,
            r.upper,
            r.vs_e1.map(|o| format!("{o:?}").to_lowercase()).unwrap_or_default()
        );
    }
    if let Some(path) = out {
        let mut manifest = RunManifest::start(
            "measure",
            serde_json::json!({"n": ns, "cutoff": cutoff, "method": method}),
            None,
        );
        if path.extension().is_some_and(|e| e == "csv") {
            let mut w = csv::Writer::from_path(path)?;
            for r in &rows {
                w.serialize(CsvMeasureRow::from(r))?;
            }
            w.flush().map_err(|e| CfError::io(path, e))?;
        } else {
            write_json(path, &rows)?;
        }
        manifest.outputs.push(path.to_path_buf());
        manifest.finish(&with_suffix(path, ".manifest.json"))?;
    }
    Ok(if undecided { EXIT_UNDECIDED } else { EXIT_OK })
}

#[derive(Serialize)]
struct CsvMeasureRow {
    n: u32,
    method: String,
    provenance: String,
    value: f64,
    lower: f64,
    upper: f64,
    cutoff: String,
    vs_e1: String,
}

impl From<&MeasureRow> for CsvMeasureRow {
    fn from(r: &MeasureRow) -> Self {
        CsvMeasureRow {
            n: r.n,
            method: r.method.clone(),
            provenance: r.provenance.clone(),
            value: r.value,
            lower: r.lower,
            upper: r.upper,
            cutoff: r.cutoff.map(|c| c.to_string()).unwrap_or_default(),
            vs_e1: r.vs_e1.map(|o| format!("{o:?}").to_lowercase()).unwrap_or_default(),
        }
    }
}

pub fn cmd_sample(seed: u64, count: usize, out: &Path) -> Result<i32> {
    let stream = sample_stream(seed, count);
    let side = write_with_metadata(&stream, out)?;
    println!("wrote {} digits to {} (metadata {})", count, out.display(), side.display());
    Ok(EXIT_OK)
}

pub fn cmd_theorem(seed: u64, m: usize, k: usize, digits: usize, out: Option<&Path>) -> Result<i32> {
    let schedule = APSchedule::new(m, k)?;
    let reserve = k.max(m);
    if digits <= reserve + m {
        return Err(CfError::domain(format!("--digits must exceed {}", reserve + m)));
    }
    let n = (digits - reserve) / m;
    let stream = sample_stream(seed, digits);
    let report = experiment::frequency_report(&stream, seed, schedule, n)?;
    let p = &report.pair;
    println!("seed {seed}, m = {m}, k = {k}, {n} positions from {digits} digits");
    println!(
        "[1,1]: {:.6}  target mu(E_{m}) = {:.6} ({:?}), z = {:+.2}",
        p.empirical, p.target, p.provenance, p.z_score
    );
    println!(
        "distance from mu(C_[1,1]) = {:.6}: {:.6} (required {:.6})",
        transfer::mu_e1(),
        report.separation,
        report.separation_required
    );
    for r in &report.singles {
        println!("{:>5}: {:.6}  target {:.6}, z = {:+.2}", r.string, r.empirical, r.target, r.z_score);
    }
    let routes = &report.routes;
    println!(
        "counting routes: subsample {:.6}, direct {:.6}, skew {:.6} ({})",
        routes.subsample,
        routes.direct,
        routes.skew,
        if routes.agree() { "agree" } else { "DISAGREE" }
    );
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    if let Some(prefix) = out {
        let mut manifest = RunManifest::start(
            "theorem",
            serde_json::json!({"seed": seed, "m": m, "k": k, "digits": digits}),
            Some(seed),
        );
        let json = with_suffix(prefix, ".json");
        let csv = with_suffix(prefix, ".csv");
        let exp = with_suffix(prefix, ".experiment.json");
        report.write_json(&json)?;
        report.write_csv(&csv)?;
        write_json(&exp, &ExperimentManifest::for_report(&report))?;
        manifest.outputs.extend([json, csv, exp]);
        manifest.finish(&with_suffix(prefix, ".manifest.json"))?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct WirsingOutput {
    lemma: Vec<LemmaReport>,
    contraction: transfer::ContractionCheck,
    config: OperatorConfig,
}

pub fn cmd_wirsing(n_max: u32, grid: usize, truncation: usize, out: Option<&Path>) -> Result<i32> {
    let cfg = OperatorConfig {
        grid,
        truncation,
        ..OperatorConfig::default()
    };
    let lemma: Vec<LemmaReport> = transfer::correlation_sequence(n_max, &cfg)?
        .iter()
        .map(LemmaReport::from_estimate)
        .collect();
    println!("{:>3} {:>14} {:>14} {:>10}", "n", "r_n(1/2)", "bound", "");
    for r in &lemma {
        println!(
            "{:>3} {:>14.6e} {:>14.6e} {:>10}",
            r.n,
            r.r_n_half,
            r.bound,
            if r.pass { "ok" } else { "VIOLATED" }
        );
    }
    let contraction = transfer::wirsing_contraction_check(&cfg)?;
    println!(
        "Ub vs 1/(2(2+x)^2): max error {:.2e}; min of a/2 - Ua: {:.3e}",
        contraction.max_ub_error, contraction.min_margin
    );
    let pass = contraction.pass && lemma.iter().all(|r| r.pass);
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if let Some(path) = out {
        let mut manifest = RunManifest::start(
            "wirsing",
            serde_json::json!({"n_max": n_max, "grid": grid, "truncation": truncation}),
            None,
        );
        write_json(path, &WirsingOutput { lemma, contraction, config: cfg })?;
        manifest.outputs.push(path.to_path_buf());
        manifest.finish(&with_suffix(path, ".manifest.json"))?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn build_family(kind: FamilyKind, m: usize) -> Result<MarkerFamily> {
    match kind {
        FamilyKind::Rotation => MarkerFamily::rotation(m),
        FamilyKind::Identity => MarkerFamily::identity(m),
        FamilyKind::RotateOnOne => {
            let rot = MarkerFamily::rotation(m)?.permutations()[0].clone();
            MarkerFamily::new(m, vec![rot, (1..=m).collect()], [(1, 0)].into(), 1)
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_skew(
    m: usize,
    kind: FamilyKind,
    seed: u64,
    count: usize,
    start_marker: usize,
    max_len: usize,
    max_digit: u64,
    out: Option<&Path>,
) -> Result<i32> {
    let family = build_family(kind, m)?;
    let t = is_transitive(&family, 64);
    println!("family {kind:?} on {m} markers: transitive = {}", t.transitive);
    for ((from, to), word) in &t.witnesses {
        println!("  {from} -> {to}: digits {word:?}");
    }
    for (from, to) in &t.unreachable {
        println!("  {from} -> {to}: unreachable");
    }
    let stream = sample_stream(seed, count + max_len);
    let report = equidistribution_report(&stream, &family, start_marker, max_len, max_digit, count)?;
    println!("{:>8} {:>6} {:>10} {:>10} {:>8}", "string", "marker", "empirical", "target", "z");
    for r in &report.rows {
        println!("{:>8} {:>6} {:>10.6} {:>10.6} {:>+8.2}", r.string, r.marker, r.empirical, r.target, r.z_score);
    }
    if let Some(path) = out {
        let mut manifest = RunManifest::start(
            "skew",
            serde_json::json!({"m": m, "family": kind, "count": count, "start_marker": start_marker,
                               "max_len": max_len, "max_digit": max_digit}),
            Some(seed),
        );
        report.write_csv(path)?;
        manifest.outputs.push(path.to_path_buf());
        manifest.finish(&with_suffix(path, ".manifest.json"))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct StatsRow {
    string: String,
    count: u64,
    empirical: f64,
    target: f64,
    stderr: f64,
    z_score: f64,
}

pub fn cmd_stats(input: &Path, max_len: usize, max_digit: u64, out: Option<&Path>) -> Result<i32> {
    let stream = DigitStream::from_file(input)?;
    if stream.len() < max_len {
        return Err(CfError::InsufficientDigits {
            needed: max_len,
            available: stream.len(),
        });
    }
    let n = stream.len() + 1 - max_len;
    let mut rows = Vec::new();
    for s in crate::skew::strings_up_to(max_len, max_digit) {
        let count = experiment::string_count(&stream, &s, n)?;
        let target = cylinder(&s).measure().to_f64();
        let stderr = (target * (1.0 - target) / n as f64).sqrt();
        let empirical = count as f64 / n as f64;
        rows.push(StatsRow {
            string: s.to_string(),
            count,
            empirical,
            target,
            stderr,
            z_score: (empirical - target) / stderr,
        });
    }
    println!("{} digits, {} positions", stream.len(), n);
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "string", "count", "empirical", "target", "z");
    for r in &rows {
        println!("{:>8} {:>10} {:>10.6} {:>10.6} {:>+8.2}", r.string, r.count, r.empirical, r.target, r.z_score);
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CfError::io(path, e))?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cutoff_is_a_usage_error() {
        assert_eq!(run(["cflab", "measure", "--n", "1", "--cutoff", "0"]), 2);
        assert_eq!(run(["cflab", "measure", "--n", "0"]), 2);
    }

    #[test]
    fn measure_n1_oracle() {
        assert_eq!(cmd_measure(&[1], 10, Method::Oracle, None).unwrap(), EXIT_OK);
    }

    #[test]
    fn sample_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.cfd");
        let b = dir.path().join("b.cfd");
        for p in [&a, &b] {
            assert_eq!(run(["cflab", "sample", "--seed", "7", "--count", "1000", "--out", p.to_str().unwrap()]), 0);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let empty = dir.path().join("e.cfd");
        assert_eq!(cmd_sample(7, 0, &empty).unwrap(), EXIT_OK);
        assert!(DigitStream::from_file(&empty).unwrap().is_empty());
    }

    #[test]
    fn families() {
        assert!(is_transitive(&build_family(FamilyKind::RotateOnOne, 4).unwrap(), 64).transitive);
        assert!(!is_transitive(&build_family(FamilyKind::Identity, 3).unwrap(), 64).transitive);
    }
}
