//! Exact continued-fraction arithmetic: expansions, convergents, cylinder
//! intervals, the Gauss map and closed-form Gauss measures.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::hplog;

/// Default number of significant digits used when rendering measures.
pub const DEFAULT_DECIMAL_DIGITS: usize = 50;

/// A finite string of continued-fraction digits, each at least 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitString(Vec<u64>);

impl DigitString {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if let Some(pos) = digits.iter().position(|&d| d == 0) {
            return Err(CfError::domain(format!(
                "continued-fraction digit at index {pos} is 0; digits must be >= 1"
            )));
        }
        Ok(DigitString(digits))
    }

    pub fn empty() -> Self {
        DigitString(Vec::new())
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` followed by `d`.
    pub fn extended(&self, d: u64) -> Result<Self> {
        let mut v = self.0.clone();
        v.push(d);
        DigitString::new(v)
    }

    pub fn convergents(&self) -> ConvergentState {
        self.0
            .iter()
            .fold(ConvergentState::initial(), |s, &a| s.push_digit(a))
    }

    /// Value of the finite continued fraction `<a_1, ..., a_n>`.
    pub fn value(&self) -> BigRational {
        self.convergents().current()
    }
}

impl TryFrom<Vec<u64>> for DigitString {
    type Error = CfError;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        DigitString::new(v)
    }
}

impl From<DigitString> for Vec<u64> {
    fn from(s: DigitString) -> Self {
        s.0
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Two consecutive convergents `p_{n-1}/q_{n-1}` and `p_n/q_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentState {
    pub p_prev: BigInt,
    pub q_prev: BigInt,
    pub p_cur: BigInt,
    pub q_cur: BigInt,
}

impl ConvergentState {
    pub fn initial() -> Self {
        ConvergentState {
            p_prev: BigInt::one(),
            q_prev: BigInt::zero(),
            p_cur: BigInt::zero(),
            q_cur: BigInt::one(),
        }
    }

    /// Advances the recurrence `p_n = a p_{n-1} + p_{n-2}` by one digit.
    pub fn push_digit(&self, a: u64) -> Self {
        assert!(a >= 1, "continued-fraction digits must be >= 1");
        let a = BigInt::from(a);
        ConvergentState {
            p_prev: self.p_cur.clone(),
            q_prev: self.q_cur.clone(),
            p_cur: &a * &self.p_cur + &self.p_prev,
            q_cur: &a * &self.q_cur + &self.q_prev,
        }
    }

    /// `p_{n-1} q_n - p_n q_{n-1}`, always `+1` or `-1`.
    pub fn determinant(&self) -> BigInt {
        &self.p_prev * &self.q_cur - &self.p_cur * &self.q_prev
    }

    pub fn current(&self) -> BigRational {
        BigRational::new(self.p_cur.clone(), self.q_cur.clone())
    }

    /// Image of `y = T^n x` under the inverse branch: `(p_n + p_{n-1} y) / (q_n + q_{n-1} y)`.
    pub fn inverse_branch(&self, y: &BigRational) -> BigRational {
        let num = BigRational::from(self.p_cur.clone()) + y * BigRational::from(self.p_prev.clone());
        let den = BigRational::from(self.q_cur.clone()) + y * BigRational::from(self.q_prev.clone());
        num / den
    }
}

/// Expands `x` in `(0, 1)` into its canonical finite continued fraction,
/// the one whose last digit is at least 2 (or the single digit `[1]`).
pub fn cf_expand(x: &BigRational) -> Result<DigitString> {
    if !(x.is_positive() && x < &BigRational::one()) {
        return Err(CfError::domain(format!("cf_expand needs 0 < x < 1, got {x}")));
    }
    let mut digits = Vec::new();
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    // x = num/den; 1/x = den/num
    while !num.is_zero() {
        let (a, r) = den.div_rem(&num);
        digits.push(a.to_u64().ok_or_else(|| CfError::domain("digit exceeds u64"))?);
        den = num;
        num = r;
    }
    // Euclid already yields last digit >= 2 unless the expansion is [1].
    DigitString::new(digits)
}

/// The Gauss map `x -> 1/x mod 1`, with `T(0) = 0`.
pub fn gauss_map(x: &BigRational) -> Result<BigRational> {
    if x.is_negative() || x >= &BigRational::one() {
        return Err(CfError::domain(format!("gauss_map needs 0 <= x < 1, got {x}")));
    }
    if x.is_zero() {
        return Ok(BigRational::zero());
    }
    let inv = x.recip();
    Ok(inv.fract())
}

pub fn push_digit(state: &ConvergentState, a: u64) -> Result<ConvergentState> {
    if a == 0 {
        return Err(CfError::domain("digit must be >= 1"));
    }
    Ok(state.push_digit(a))
}

/// A cylinder set `C_s`, stored as its closure `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    pub string: DigitString,
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Cylinder {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn measure(&self) -> ExactMeasure {
        ExactMeasure::from_ratio(gauss_ratio(&self.lo, &self.hi))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Cylinder of all points whose first digits are `s`; the empty string gives `[0, 1]`.
pub fn cylinder(s: &DigitString) -> Cylinder {
    if s.is_empty() {
        return Cylinder {
            string: s.clone(),
            lo: BigRational::zero(),
            hi: BigRational::one(),
        };
    }
    let c = s.convergents();
    let a = BigRational::new(c.p_cur.clone(), c.q_cur.clone());
    let b = BigRational::new(&c.p_cur + &c.p_prev, &c.q_cur + &c.q_prev);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Cylinder {
        string: s.clone(),
        lo,
        hi,
    }
}

fn gauss_ratio(lo: &BigRational, hi: &BigRational) -> BigRational {
    let one = BigRational::one();
    (&one + hi) / (&one + lo)
}

/// A Gauss measure written exactly as `log(ratio) / log 2`.
///
/// Ordering and equality are decided on the rational `ratio`; decimals are
/// only ever a rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMeasure {
    ratio: BigRational,
}

impl ExactMeasure {
    pub fn zero() -> Self {
        ExactMeasure {
            ratio: BigRational::one(),
        }
    }

    /// Wraps a ratio `r >= 1`.
    pub fn from_ratio(ratio: BigRational) -> Self {
        assert!(ratio >= BigRational::one(), "measure ratio must be >= 1, got {ratio}");
        ExactMeasure { ratio }
    }

    pub fn ratio(&self) -> &BigRational {
        &self.ratio
    }

    pub fn to_f64(&self) -> f64 {
        hplog::log2_f64(&self.ratio)
    }

    /// Truncated decimal rendering with `digits` significant digits.
    pub fn decimal(&self, digits: usize) -> String {
        hplog::log2_decimal(&self.ratio, digits)
    }

    pub fn plus(&self, other: &ExactMeasure) -> ExactMeasure {
        ExactMeasure {
            ratio: &self.ratio * &other.ratio,
        }
    }

    /// `self - other`; fails if the result would be negative.
    pub fn minus(&self, other: &ExactMeasure) -> Result<ExactMeasure> {
        let r = &self.ratio / &other.ratio;
        if r < BigRational::one() {
            return Err(CfError::domain("measure difference is negative"));
        }
        Ok(ExactMeasure { ratio: r })
    }

    /// Total size in bits of the ratio's numerator and denominator.
    pub fn ratio_bits(&self) -> u64 {
        self.ratio.numer().bits() + self.ratio.denom().bits()
    }
}

impl PartialOrd for ExactMeasure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactMeasure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio.cmp(&other.ratio)
    }
}

impl Add for &ExactMeasure {
    type Output = ExactMeasure;

    fn add(self, rhs: &ExactMeasure) -> ExactMeasure {
        self.plus(rhs)
    }
}

impl<'a> Sum<&'a ExactMeasure> for ExactMeasure {
    fn sum<I: Iterator<Item = &'a ExactMeasure>>(iter: I) -> Self {
        measure_sum(iter)
    }
}

impl fmt::Display for ExactMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(DEFAULT_DECIMAL_DIGITS);
        write!(f, "{}", self.decimal(digits))
    }
}

/// Gauss measure of the interval between `lo` and `hi` (endpoints irrelevant).
pub fn gauss_measure_interval(lo: &BigRational, hi: &BigRational) -> Result<ExactMeasure> {
    if lo.is_negative() || hi > &BigRational::one() || lo >= hi {
        return Err(CfError::domain(format!(
            "gauss_measure_interval needs 0 <= lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    Ok(ExactMeasure::from_ratio(gauss_ratio(lo, hi)))
}

/// Exact sum of measures of pairwise disjoint sets: the product of ratios.
pub fn measure_sum<'a>(terms: impl IntoIterator<Item = &'a ExactMeasure>) -> ExactMeasure {
    let ratio = terms
        .into_iter()
        .fold(BigRational::one(), |acc, m| acc * &m.ratio);
    ExactMeasure { ratio }
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
