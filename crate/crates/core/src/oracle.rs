//! Certified bounds on `mu(E_n)`, `E_n = A ∩ T^-n A`, by cylinder enumeration.
//!
//! `E_n` is the disjoint union of the cylinders `[1, d_2, ..., d_n, 1]`. The
//! enumeration is depth-first over the interior digits, each capped at a
//! cutoff. Everything beyond a cutoff is bounded two ways:
//!
//! * crudely, by the measure of the whole truncated remainder;
//! * sharply, by rearrangement: below a prefix the remaining constraint is
//!   `T^j x ∈ T^-(n-j) A`, whose Lebesgue share of the truncated remainder is
//!   pinned between two explicit values, and the pushed-forward density of the
//!   prefix is decreasing, so the extreme placements of that share give the
//!   bounds.
//!
//! Leaf and tail measures are evaluated in double precision, widened by a
//! relative margin, and accumulated exactly as fixed-point integers with
//! `FRAC_BITS` fractional bits, floor for lower and ceiling for upper sums.

use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{cylinder, DigitString, ExactMeasure};
use crate::error::{CfError, Result};
use crate::hplog::{log2_fixed, rational_decimal};

pub const FRAC_BITS: u32 = 100;

/// Relative slack applied to every double-precision term.
pub const TERM_MARGIN: f64 = 1e-13;

/// Largest admissible `(n - 1) log2(D)`.
pub const GUARD_BITS: f64 = 40.0;

pub const DEFAULT_CUTOFF: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffSchedule {
    /// Every interior digit runs over `1..=D`.
    Uniform,
    /// A prefix of Lebesgue width `w` explores digits up to
    /// `D (w / w_root)^(1/4)`.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub cutoff: u64,
    pub schedule: CutoffSchedule,
}

impl OracleConfig {
    pub fn adaptive(cutoff: u64) -> Self {
        OracleConfig {
            cutoff,
            schedule: CutoffSchedule::Adaptive,
        }
    }

    pub fn uniform(cutoff: u64) -> Self {
        OracleConfig {
            cutoff,
            schedule: CutoffSchedule::Uniform,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Gauss,
    Lebesgue,
}

/// Convergents in machine integers; `odd` marks determinant `-1`.
#[derive(Clone, Copy, Debug)]
struct Conv {
    pp: u128,
    qp: u128,
    p: u128,
    q: u128,
    odd: bool,
}

impl Conv {
    fn initial() -> Self {
        Conv {
            pp: 1,
            qp: 0,
            p: 0,
            q: 1,
            odd: false,
        }
    }

    fn push(self, d: u64) -> Self {
        let d = d as u128;
        Conv {
            pp: self.p,
            qp: self.q,
            p: d * self.p + self.pp,
            q: d * self.q + self.qp,
            odd: !self.odd,
        }
    }

    fn width(&self) -> f64 {
        1.0 / (self.q as f64 * (self.q + self.qp) as f64)
    }

    /// Measure of the image of `[z0, z0 + len]` under the inverse branch
    /// `z -> (p + pp z) / (q + qp z)`.
    fn image(&self, kind: Kind, z0: f64, len: f64) -> f64 {
        let (a, b) = ((self.q + self.p) as f64, (self.qp + self.pp) as f64);
        let (c, e) = (self.q as f64, self.qp as f64);
        let z1 = z0 + len;
        match kind {
            Kind::Lebesgue => len / ((c + e * z0) * (c + e * z1)),
            Kind::Gauss => {
                let x = if self.odd {
                    len / ((a + b * z1) * (c + e * z0))
                } else {
                    len / ((a + b * z0) * (c + e * z1))
                };
                x.ln_1p() / std::f64::consts::LN_2
            }
        }
    }
}

fn scale() -> f64 {
    2f64.powi(FRAC_BITS as i32)
}

fn fixed_floor(t: f64) -> u128 {
    (t * (1.0 - TERM_MARGIN) * scale()) as u128
}

fn fixed_ceil(t: f64) -> u128 {
    (t * (1.0 + TERM_MARGIN) * scale()) as u128 + 1
}

fn fixed_to_rational(v: u128) -> BigRational {
    BigRational::new(BigInt::from(v), BigInt::one() << FRAC_BITS as usize)
}

#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    enum_lo: u128,
    enum_hi: u128,
    tail_lo: u128,
    tail_hi: u128,
    crude: u128,
    leaves: u64,
}

impl Acc {
    fn leaf(&mut self, t: f64) {
        self.enum_lo += fixed_floor(t);
        self.enum_hi += fixed_ceil(t);
        self.leaves += 1;
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.enum_lo += o.enum_lo;
        self.enum_hi += o.enum_hi;
        self.tail_lo += o.tail_lo;
        self.tail_hi += o.tail_hi;
        self.crude += o.crude;
        self.leaves += o.leaves;
        self
    }
}

/// Bounds on the Lebesgue measure of `T^-m A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LebesgueBounds {
    pub lo: f64,
    pub hi: f64,
}

struct Ctx<'a> {
    kind: Kind,
    cutoff: u64,
    schedule: CutoffSchedule,
    root_width: f64,
    /// `ell[m]` bounds `|T^-m A|`.
    ell: &'a [LebesgueBounds],
}

impl Ctx<'_> {
    fn cutoff_for(&self, node: &Conv) -> u64 {
        match self.schedule {
            CutoffSchedule::Uniform => self.cutoff,
            CutoffSchedule::Adaptive => {
                let c = (self.cutoff as f64 * (node.width() / self.root_width).powf(0.25)).ceil();
                (c as u64).clamp(1, self.cutoff)
            }
        }
    }

    fn tail(&self, node: &Conv, free: usize, cutoff: u64, acc: &mut Acc) {
        let y = 1.0 / (cutoff as f64 + 1.0);
        let ell = self.ell[free - 1];
        let l_hi = (ell.hi / cutoff as f64).min(y);
        let l_lo = ell.lo / (cutoff as f64 + 2.0);
        let crude = fixed_ceil(node.image(self.kind, 0.0, y));
        let hi = fixed_ceil(node.image(self.kind, 0.0, l_hi)).min(crude);
        acc.crude += crude;
        acc.tail_hi += hi;
        acc.tail_lo += fixed_floor(node.image(self.kind, y - l_lo, l_lo));
    }

    fn explore(&self, node: Conv, free: usize, cutoff: u64, acc: &mut Acc) {
        for d in 1..=cutoff {
            self.child(node.push(d), free, acc);
        }
        self.tail(&node, free, cutoff, acc);
    }

    fn child(&self, child: Conv, free: usize, acc: &mut Acc) {
        if free == 1 {
            acc.leaf(child.push(1).image(self.kind, 0.0, 1.0));
        } else {
            self.explore(child, free - 1, self.cutoff_for(&child), acc);
        }
    }

    /// Root enumeration, parallel over the first free digit.
    fn run(&self, root: Conv, free: usize) -> Acc {
        let mut acc = (1..=self.cutoff)
            .into_par_iter()
            .fold(Acc::default, |mut acc, d| {
                self.child(root.push(d), free, &mut acc);
                acc
            })
            .reduce(Acc::default, Acc::merge);
        self.tail(&root, free, self.cutoff, &mut acc);
        acc
    }
}

/// Cutoff used for the auxiliary `|T^-m A|` enumerations.
fn ell_cutoff(m: usize, cutoff: u64) -> u64 {
    let bits = (24.0 / m as f64).min(17.0);
    (2f64.powf(bits) as u64).clamp(16, cutoff.max(16))
}

/// Bounds on `|T^-m A|` for `m = 0..count`.
pub fn lebesgue_preimage_table(count: usize, cutoff: u64) -> Vec<LebesgueBounds> {
    let mut ell = vec![LebesgueBounds { lo: 0.5, hi: 0.5 }];
    for m in 1..count {
        let ctx = Ctx {
            kind: Kind::Lebesgue,
            cutoff: ell_cutoff(m, cutoff),
            schedule: CutoffSchedule::Adaptive,
            root_width: 1.0,
            ell: &ell,
        };
        let acc = ctx.run(Conv::initial(), m);
        let s = scale();
        let lo = (acc.enum_lo + acc.tail_lo) as f64 / s * (1.0 - 1e-15);
        let hi = (acc.enum_hi + acc.tail_hi.min(acc.crude)) as f64 / s * (1.0 + 1e-15);
        ell.push(LebesgueBounds {
            lo: lo.max(0.0),
            hi: hi.min(1.0),
        });
    }
    ell.truncate(count.max(1));
    ell
}

/// Refuses enumerations with `(n - 1) log2(D) > 40`.
pub fn check_guard(n: u32, cutoff: u64) -> Result<()> {
    if n == 0 {
        return Err(CfError::domain("n must be >= 1"));
    }
    if cutoff == 0 {
        return Err(CfError::domain("digit cutoff D must be >= 1"));
    }
    let cost = (n - 1) as f64 * (cutoff as f64).log2();
    if cost > GUARD_BITS {
        return Err(CfError::Resource(format!(
            "(n-1)*log2(D) = {}*log2({}) = {:.1} exceeds {}",
            n - 1,
            cutoff,
            cost,
            GUARD_BITS
        )));
    }
    Ok(())
}

/// Largest cutoff admitted by the guard for `n`, capped at `cap`.
pub fn max_cutoff(n: u32, cap: u64) -> u64 {
    if n <= 1 {
        return cap;
    }
    let d = 2f64.powf(GUARD_BITS / (n - 1) as f64).floor() as u64;
    d.min(cap).max(1)
}

/// Certified enclosure of `mu(E_n)`.
///
/// All bounds are values of the Gauss measure (not log-ratios), as dyadic
/// rationals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureInterval {
    pub n: u32,
    pub cutoff: u64,
    pub schedule: CutoffSchedule,
    #[serde(serialize_with = "ser_rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub upper: BigRational,
    /// Lower bound on the enumerated partial sum.
    #[serde(serialize_with = "ser_rational")]
    pub enumerated: BigRational,
    /// Enumerated sum plus the whole measure of every truncated remainder.
    #[serde(serialize_with = "ser_rational")]
    pub crude_upper: BigRational,
    /// Exact value, when `n = 1`.
    #[serde(skip)]
    pub exact: Option<ExactMeasure>,
    pub leaves: u64,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl MeasureInterval {
    pub fn lower_f64(&self) -> f64 {
        self.lower.to_f64().unwrap_or(f64::NAN)
    }

    pub fn upper_f64(&self) -> f64 {
        self.upper.to_f64().unwrap_or(f64::NAN)
    }

    pub fn midpoint(&self) -> f64 {
        ((&self.lower + &self.upper) / BigInt::from(2)).to_f64().unwrap_or(f64::NAN)
    }

    pub fn width(&self) -> f64 {
        (&self.upper - &self.lower).to_f64().unwrap_or(f64::NAN)
    }

    pub fn crude_width(&self) -> f64 {
        (&self.crude_upper - &self.enumerated).to_f64().unwrap_or(f64::NAN)
    }

    /// Whether `[x - slack, x + slack]` meets the interval.
    pub fn admits(&self, x: f64, slack: f64) -> bool {
        x + slack >= self.lower_f64() && x - slack <= self.upper_f64()
    }

    pub fn contains_interval(&self, other: &MeasureInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    pub fn golden(&self) -> GoldenValue {
        GoldenValue {
            n: self.n,
            cutoff: self.cutoff,
            lower_ratio: self.lower.to_string(),
            upper_ratio: self.upper.to_string(),
            decimal_50: rational_decimal(&self.lower, 50),
        }
    }
}

/// Dyadic enclosure of `log2(10/9) = mu(E_1)`.
pub fn e1_bounds() -> (BigRational, BigRational) {
    let fx = log2_fixed(&BigRational::new(BigInt::from(10), BigInt::from(9)), FRAC_BITS as u64);
    let two = BigInt::from(2);
    (fixed_bigint(&fx - &two), fixed_bigint(fx + two))
}

fn fixed_bigint(v: BigInt) -> BigRational {
    BigRational::new(v, BigInt::one() << FRAC_BITS as usize)
}

/// `mu(E_n)` with the adaptive schedule at cutoff `D`.
pub fn en_exact(n: u32, cutoff: u64) -> Result<MeasureInterval> {
    en_interval(n, &OracleConfig::adaptive(cutoff))
}

pub fn en_interval(n: u32, cfg: &OracleConfig) -> Result<MeasureInterval> {
    check_guard(n, cfg.cutoff)?;
    if n == 1 {
        let exact = cylinder(&DigitString::new(vec![1, 1])?).measure();
        let (lower, upper) = e1_bounds();
        return Ok(MeasureInterval {
            n,
            cutoff: cfg.cutoff,
            schedule: cfg.schedule,
            enumerated: lower.clone(),
            crude_upper: upper.clone(),
            lower,
            upper,
            exact: Some(exact),
            leaves: 1,
        });
    }
    let free = (n - 1) as usize;
    let ell = lebesgue_preimage_table(free, cfg.cutoff);
    let root = Conv::initial().push(1);
    let ctx = Ctx {
        kind: Kind::Gauss,
        cutoff: cfg.cutoff,
        schedule: cfg.schedule,
        root_width: root.width(),
        ell: &ell,
    };
    let acc = ctx.run(root, free);
    let lower = acc.enum_lo + acc.tail_lo;
    let upper = acc.enum_hi + acc.tail_hi;
    let crude = acc.enum_hi + acc.crude;
    Ok(MeasureInterval {
        n,
        cutoff: cfg.cutoff,
        schedule: cfg.schedule,
        lower: fixed_to_rational(lower),
        upper: fixed_to_rational(upper.min(crude)),
        enumerated: fixed_to_rational(acc.enum_lo),
        crude_upper: fixed_to_rational(crude),
        exact: None,
        leaves: acc.leaves,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnOrdering {
    Less,
    Equal,
    Greater,
    Undecided,
}

/// Certified comparison of `mu(E_n)` with `mu(E_1)`.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub n: u32,
    pub ordering: EnOrdering,
    /// The interval that decided the comparison, or the last one tried.
    pub interval: MeasureInterval,
    #[serde(serialize_with = "ser_rational")]
    pub e1_lower: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub e1_upper: BigRational,
    pub cutoffs_tried: Vec<u64>,
}

pub fn compare_en_e1(n: u32) -> Result<Comparison> {
    compare_en_e1_up_to(n, DEFAULT_CUTOFF)
}

/// Escalates the cutoff `16, 64, 256, ...` up to `max_cutoff` (and the guard)
/// until the interval lies strictly on one side of `mu(E_1)`.
pub fn compare_en_e1_up_to(n: u32, max_cutoff: u64) -> Result<Comparison> {
    let (e1_lower, e1_upper) = e1_bounds();
    let limit = self::max_cutoff(n, max_cutoff.max(1));
    let mut tried = Vec::new();
    let mut d = 16.min(limit);
    loop {
        let interval = en_exact(n, d)?;
        tried.push(d);
        let ordering = if n == 1 {
            EnOrdering::Equal
        } else if interval.lower > e1_upper {
            EnOrdering::Greater
        } else if interval.upper < e1_lower {
            EnOrdering::Less
        } else {
            EnOrdering::Undecided
        };
        if ordering != EnOrdering::Undecided || d >= limit {
            return Ok(Comparison {
                n,
                ordering,
                interval,
                e1_lower,
                e1_upper,
                cutoffs_tried: tried,
            });
        }
        d = (d * 4).min(limit);
    }
}

/// `[mu(A)^2 - mu(A) b_n, mu(A)^2 + mu(A) b_n]` with `b_n = log(3/2)/2^(n+2)`.
pub fn lemma_band(n: u32) -> (f64, f64) {
    let mu = crate::transfer::mu_a();
    let half = mu * crate::transfer::lemma_bound(n);
    (mu * mu - half, mu * mu + half)
}

pub fn within_lemma_band(interval: &MeasureInterval) -> bool {
    let (lo, hi) = lemma_band(interval.n);
    interval.lower_f64() >= lo && interval.upper_f64() <= hi
}

/// Golden-file record of a certified value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenValue {
    pub n: u32,
    #[serde(rename = "D")]
    pub cutoff: u64,
    /// Lower bound on `mu(E_n)` as an exact dyadic fraction.
    pub lower_ratio: String,
    pub upper_ratio: String,
    /// Lower bound truncated to 50 decimals.
    pub decimal_50: String,
}

impl GoldenValue {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CfError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| CfError::io(path, e))
    }

    pub fn bounds(&self) -> Result<(BigRational, BigRational)> {
        let parse = |s: &str| {
            s.parse::<BigRational>()
                .map_err(|e| CfError::domain(format!("bad rational {s:?}: {e}")))
        };
        Ok((parse(&self.lower_ratio)?, parse(&self.upper_ratio)?))
    }

    pub fn lower_f64(&self) -> Result<f64> {
        Ok(self.bounds()?.0.to_f64().unwrap_or(f64::NAN))
    }

    pub fn upper_f64(&self) -> Result<f64> {
        Ok(self.bounds()?.1.to_f64().unwrap_or(f64::NAN))
    }

    pub fn midpoint(&self) -> Result<f64> {
        Ok((self.lower_f64()? + self.upper_f64()?) / 2.0)
    }
}
