//! Fixed-point binary logarithms of exact rationals, used to render
//! Gauss-measure values as long decimals.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `n / d` as an `f64`, correct to a couple of ulps even when both sides
/// exceed the `f64` range.
pub fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // Bring the quotient to ~120 significant bits before converting.
    let shift = 120 - (nb - db);
    let q = if shift >= 0 {
        (n << shift as usize) / d
    } else {
        n / (d << (-shift) as usize)
    };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    qf * (2f64).powi(-(shift as i32))
}

/// `log2(r)` in double precision, accurate near `r = 1`.
pub fn log2_f64(r: &BigRational) -> f64 {
    let diff = r.numer() - r.denom();
    ratio_to_f64(&diff, r.denom()).ln_1p() / std::f64::consts::LN_2
}

fn atanh_fixed(num: &BigInt, den: &BigInt, bits: u64) -> BigInt {
    // atanh(z) = z + z^3/3 + z^5/5 + ...,  |z| <= 1/5 here; odd in z.
    if num.is_negative() {
        return -atanh_fixed(&-num, den, bits);
    }
    let z = (num << bits as usize) / den;
    let z2 = (&z * &z) >> bits as usize;
    let mut power = z.clone();
    let mut sum = z;
    let mut k: u64 = 1;
    loop {
        power = (&power * &z2) >> bits as usize;
        if power.is_zero() {
            break;
        }
        k += 2;
        sum += &power / BigInt::from(k);
    }
    sum
}

fn ln2_fixed(bits: u64) -> BigInt {
    atanh_fixed(&BigInt::one(), &BigInt::from(3), bits) << 1usize
}

/// `log2(r)` as a fixed-point integer with `bits` fractional bits.
pub fn log2_fixed(r: &BigRational, bits: u64) -> BigInt {
    assert!(r.is_positive(), "logarithm of a non-positive rational");
    let work = bits + 32;
    let num = r.numer().clone();
    let den = r.denom().clone();
    // r = 2^e * s with s in [3/4, 3/2)
    let mut e = num.bits() as i64 - den.bits() as i64;
    let scaled = |e: i64| -> (BigInt, BigInt) {
        if e >= 0 {
            (num.clone(), &den << e as usize)
        } else {
            (&num << (-e) as usize, den.clone())
        }
    };
    let (mut a, mut b) = scaled(e);
    while &a * 4 < &b * 3 {
        e -= 1;
        (a, b) = scaled(e);
    }
    while &a * 2 >= &b * 3 {
        e += 1;
        (a, b) = scaled(e);
    }
    let zn = &a - &b;
    let zd = &a + &b;
    let at = atanh_fixed(&zn, &zd, work) << 1usize;
    let frac = (at << work as usize) / ln2_fixed(work);
    let total = frac + (BigInt::from(e) << work as usize);
    total >> 32usize
}

/// Decimal rendering of `log2(r)` with `sig_digits` significant digits
/// (truncated, not rounded).
pub fn log2_decimal(r: &BigRational, sig_digits: usize) -> String {
    let sig_digits = sig_digits.max(1);
    if r.is_one() {
        return "0".to_string();
    }
    let approx = log2_f64(r).abs();
    let mag = if approx > 0.0 {
        approx.log10().floor() as i64
    } else {
        0
    };
    let places = (sig_digits as i64 - 1 - mag).max(0) as u64;
    let bits = (places as f64 * std::f64::consts::LOG2_10).ceil() as u64 + 64;
    let fixed = log2_fixed(r, bits);
    let negative = fixed.sign() == Sign::Minus;
    let scaled: BigInt = (fixed.abs() * BigInt::from(10u32).pow(places as u32)) >> bits as usize;
    let digits = scaled.to_string();
    let places = places as usize;
    let (int_part, frac_part) = if digits.len() > places {
        let (i, f) = digits.split_at(digits.len() - places);
        (i.to_string(), f.to_string())
    } else {
        ("0".to_string(), format!("{:0>width$}", digits, width = places))
    };
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part);
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(&frac_part);
    }
    out
}

/// Decimal expansion of a non-negative rational, truncated to `places`
/// digits after the point.
pub fn rational_decimal(r: &BigRational, places: usize) -> String {
    assert!(!r.is_negative(), "rational_decimal expects a non-negative value");
    let scaled: BigInt = (r.numer() * BigInt::from(10u32).pow(places as u32)) / r.denom();
    let digits = format!("{:0>width$}", scaled.to_string(), width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    if places == 0 {
        int_part.to_string()
    } else {
        format!("{int_part}.{frac_part}")
    }
}

/// Smallest power-of-two denominator rational `>= x` (`up`) or `<= x`
/// with `bits` fractional bits.
pub fn round_dyadic(x: &BigRational, bits: u64, up: bool) -> BigRational {
    let scaled = x.numer() << bits as usize;
    let (q, rem) = scaled.div_rem(x.denom());
    let q = if rem.is_zero() {
        q
    } else if up == (x.numer().sign() != Sign::Minus) {
        q + 1
    } else {
        q
    };
    // floor semantics for negatives follow from div_rem truncation
    BigRational::new(q, BigInt::one() << bits as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn log2_of_powers_of_two_is_exact() {
        assert_eq!(log2_decimal(&rat(8, 1), 20), "3.0000000000000000000");
        assert_eq!(log2_decimal(&rat(1, 4), 10), "-2.000000000");
    }

    #[test]
    fn log2_matches_reference_digits() {
        // log2(4/3) and log2(10/9), reference digits from a 30-digit mpmath evaluation
        assert!(log2_decimal(&rat(4, 3), 30).starts_with("0.41503749927884381854626105605"));
        assert!(log2_decimal(&rat(10, 9), 30).starts_with("0.152003093445049984962841541"));
    }

    #[test]
    fn f64_path_agrees_with_fixed_point() {
        for (n, d) in [(4, 3), (10, 9), (1_000_001, 1_000_000), (7, 2)] {
            let r = rat(n, d);
            let hi: f64 = log2_decimal(&r, 20).parse().unwrap();
            assert!((hi - log2_f64(&r)).abs() < 1e-15 * hi.abs().max(1.0));
        }
    }

    #[test]
    fn rational_decimals() {
        assert_eq!(rational_decimal(&rat(1, 8), 5), "0.12500");
        assert_eq!(rational_decimal(&rat(2, 3), 4), "0.6666");
        assert_eq!(rational_decimal(&rat(7, 2), 0), "3");
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let x = rat(1, 3);
        let lo = round_dyadic(&x, 10, false);
        let hi = round_dyadic(&x, 10, true);
        assert!(lo <= x && x <= hi);
        assert_eq!(&hi - &lo, rat(1, 1024));
    }
}
