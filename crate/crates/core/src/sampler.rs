//! Digit streams drawn from the Gauss measure.
//!
//! After the digits `a_1..a_n` have been fixed, the point `y = T^n x` has a
//! conditional density proportional to `1 / ((1 + t y)(1 + u y))` on `[0, 1]`,
//! where `t = q_{n-1}/q_n` and `u = (p_{n-1} + q_{n-1}) / (p_n + q_n)`. Pushing
//! a digit `k` maps `t -> 1/(k+t)` and `u -> 1/(k+u)`. Each digit is drawn by
//! inverse-CDF search over this conditional law.

use num_rational::BigRational;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::cf::ConvergentState;
use crate::hplog::ratio_to_f64;
use crate::stream::{DigitStream, StreamSource};

/// Digits at or above this value are reported as this value.
pub const TAIL_CUTOFF: u64 = 1_000_000;

pub const PRNG_ALGORITHM: &str = "ChaCha20Rng/rand_chacha-0.3/seed_from_u64";

/// Bumped whenever the mapping from seed to digits changes.
pub const SAMPLER_VERSION: u32 = 1;

/// The pair `(t, u)` together with `delta = t - u`, tracked separately because
/// `t` and `u` agree to ~`2 log10(q_n)` digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalState {
    t: f64,
    u: f64,
    delta: f64,
}

impl Default for ConditionalState {
    fn default() -> Self {
        ConditionalState::initial()
    }
}

impl ConditionalState {
    /// Before any digit: the unconditioned Gauss density `1/(1+y)`.
    pub fn initial() -> Self {
        ConditionalState {
            t: 0.0,
            u: 1.0,
            delta: -1.0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn push(&self, k: u64) -> Self {
        let kt = k as f64 + self.t;
        let ku = k as f64 + self.u;
        ConditionalState {
            t: 1.0 / kt,
            u: 1.0 / ku,
            delta: -self.delta / (kt * ku),
        }
    }

    /// State derived from exact convergents.
    pub fn from_convergents(c: &ConvergentState) -> Self {
        let t_num = c.q_prev.clone();
        let t_den = c.q_cur.clone();
        let u_num = &c.p_prev + &c.q_prev;
        let u_den = &c.p_cur + &c.q_cur;
        let delta = BigRational::new(&t_num * &u_den - &u_num * &t_den, &t_den * &u_den);
        ConditionalState {
            t: ratio_to_f64(&t_num, &t_den),
            u: ratio_to_f64(&u_num, &u_den),
            delta: ratio_to_f64(delta.numer(), delta.denom()),
        }
    }

    /// `F(y) = ∫_0^y dz / ((1 + t z)(1 + u z))`.
    pub fn primitive(&self, y: f64) -> f64 {
        if self.delta.abs() < 1e-300 {
            y / (1.0 + self.t * y)
        } else {
            (self.delta * y / (1.0 + self.u * y)).ln_1p() / self.delta
        }
    }

    /// Conditional probability that the next digit is at most `k`.
    pub fn cdf(&self, k: u64) -> f64 {
        let total = self.primitive(1.0);
        (total - self.primitive(1.0 / (k as f64 + 1.0))) / total
    }

    /// Conditional probability that the next digit is exactly `k`.
    pub fn probability(&self, k: u64) -> f64 {
        assert!(k >= 1);
        (self.primitive(1.0 / k as f64) - self.primitive(1.0 / (k as f64 + 1.0))) / self.primitive(1.0)
    }

    /// Conditional probability that the next digit is at least `k`.
    pub fn tail(&self, k: u64) -> f64 {
        self.primitive(1.0 / k as f64) / self.primitive(1.0)
    }
}

/// `(digit, probability)` for digits `1..cutoff`, with the last entry
/// carrying the whole tail `P(digit >= cutoff)`.
pub fn next_digit_distribution(state: &ConditionalState, cutoff: u64) -> Vec<(u64, f64)> {
    assert!(cutoff >= 1);
    let mut out: Vec<(u64, f64)> = (1..cutoff).map(|k| (k, state.probability(k))).collect();
    out.push((cutoff, state.tail(cutoff)));
    out
}

/// Uniform deviate in `[0, 1)` with 53 random bits.
pub fn uniform53(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Lazily produces Gauss-distributed digits from a seed.
#[derive(Clone, Debug)]
pub struct GaussSampler {
    seed: u64,
    state: ConditionalState,
    rng: ChaCha20Rng,
    count: u64,
    cutoff: u64,
    check: Option<DriftCheck>,
}

#[derive(Clone, Debug)]
struct DriftCheck {
    every: u64,
    exact: ConvergentState,
    max_drift: f64,
}

impl GaussSampler {
    pub fn new(seed: u64) -> Self {
        GaussSampler {
            seed,
            state: ConditionalState::initial(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            count: 0,
            cutoff: TAIL_CUTOFF,
            check: None,
        }
    }

    /// Also tracks exact convergents and compares the floating state against
    /// them every `every` digits. Costs O(n) bits of memory per digit.
    pub fn with_drift_check(mut self, every: u64) -> Self {
        self.check = Some(DriftCheck {
            every: every.max(1),
            exact: ConvergentState::initial(),
            max_drift: 0.0,
        });
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &ConditionalState {
        &self.state
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Largest `|t - t_exact|`, `|u - u_exact|` seen at checkpoints.
    pub fn max_drift(&self) -> Option<f64> {
        self.check.as_ref().map(|c| c.max_drift)
    }

    fn draw(&mut self) -> u64 {
        let v = uniform53(&mut self.rng);
        let total = self.state.primitive(1.0);
        let mut k = 1;
        while k < self.cutoff {
            let cdf = (total - self.state.primitive(1.0 / (k as f64 + 1.0))) / total;
            if v <= cdf {
                break;
            }
            k += 1;
        }
        k
    }
}

impl Iterator for GaussSampler {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let k = self.draw();
        self.state = self.state.push(k);
        self.count += 1;
        if let Some(check) = self.check.as_mut() {
            check.exact = check.exact.push_digit(k);
            if self.count % check.every == 0 {
                let exact = ConditionalState::from_convergents(&check.exact);
                let drift = (exact.t - self.state.t).abs().max((exact.u - self.state.u).abs());
                check.max_drift = check.max_drift.max(drift);
            }
        }
        Some(k)
    }
}

/// `n` digits from the Gauss sampler seeded with `seed`.
pub fn sample_stream(seed: u64, n: usize) -> DigitStream {
    let digits: Vec<u64> = GaussSampler::new(seed).take(n).collect();
    DigitStream::new(
        digits,
        StreamSource::Sampler {
            seed,
            algorithm: PRNG_ALGORITHM.to_string(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{cylinder, DigitString};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn initial_distribution_is_gauss_kuzmin() {
        let s = ConditionalState::initial();
        assert!((s.probability(1) - (4.0f64 / 3.0).ln() / LN2).abs() < 1e-15);
        assert!((s.probability(2) - (9.0f64 / 8.0).ln() / LN2).abs() < 1e-15);
    }

    #[test]
    fn conditional_after_digit_one_matches_exact_cylinders() {
        let s = ConditionalState::initial().push(1);
        assert_eq!((s.t(), s.u()), (1.0, 0.5));
        let parent = cylinder(&DigitString::new(vec![1]).unwrap()).measure().to_f64();
        for k in 1..=5 {
            let child = cylinder(&DigitString::new(vec![1, k]).unwrap()).measure().to_f64();
            assert!((s.probability(k) - child / parent).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn primitive_limit_agrees_with_quadrature() {
        // t == u: F(y) = y / (1 + t y); check against a midpoint rule
        let s = ConditionalState {
            t: 0.3,
            u: 0.3,
            delta: 0.0,
        };
        let n = 200_000;
        let h = 0.7 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let z = (i as f64 + 0.5) * h;
                h / ((1.0 + 0.3 * z) * (1.0 + 0.3 * z))
            })
            .sum();
        assert!((s.primitive(0.7) - quad).abs() < 1e-10);
        // and the general branch approaches it as delta -> 0
        let near = ConditionalState {
            t: 0.3,
            u: 0.3 - 1e-9,
            delta: 1e-9,
        };
        assert!((near.primitive(0.7) - quad).abs() < 1e-8);
    }

    #[test]
    fn distribution_sums_to_one() {
        let mut s = ConditionalState::initial();
        for &k in &[1u64, 3, 1, 7, 2, 40, 1, 1] {
            let total: f64 = next_digit_distribution(&s, 10_000).iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-15 * 10.0, "sum {total}");
            s = s.push(k);
        }
    }

    #[test]
    fn delta_tracks_exact_difference_deep_into_the_expansion() {
        let digits: Vec<u64> = GaussSampler::new(11).take(400).collect();
        let mut st = ConditionalState::initial();
        let mut exact = ConvergentState::initial();
        for &d in &digits {
            st = st.push(d);
            exact = exact.push_digit(d);
        }
        let ex = ConditionalState::from_convergents(&exact);
        assert!((st.t() - ex.t()).abs() < 1e-14);
        assert!((st.u() - ex.u()).abs() < 1e-14);
        if ex.delta() != 0.0 {
            assert!(((st.delta() - ex.delta()) / ex.delta()).abs() < 1e-11);
        }
    }

    #[test]
    fn same_seed_same_digits() {
        let a: Vec<u64> = GaussSampler::new(42).take(1000).collect();
        let b: Vec<u64> = GaussSampler::new(42).take(1000).collect();
        let c: Vec<u64> = GaussSampler::new(43).take(1000).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_stream(5, 0).is_empty());
    }

    #[test]
    fn drift_check_stays_small() {
        let mut s = GaussSampler::new(3).with_drift_check(1000);
        for _ in 0..10_000 {
            s.next();
        }
        assert!(s.max_drift().unwrap() < 1e-13);
    }
}
