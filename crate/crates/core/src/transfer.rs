//! The Gauss transfer operator and Wirsing's derivative operator on gridded
//! densities.
//!
//! Densities live on `N + 1` equally spaced nodes of `[0, 1]` and are
//! interpolated by piecewise cubic Hermite polynomials whose node slopes come
//! from fourth-order finite differences (one-sided at the ends). Infinite
//! series over the branch index `k` are truncated at `K`; the remainder of the
//! transfer series is corrected to first order in `1/k` and the second-order
//! residue is reported as a bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CfError, Result};

pub const LN2: f64 = std::f64::consts::LN_2;

/// `ln(4/3)`.
pub fn ln_4_3() -> f64 {
    (4.0f64 / 3.0).ln()
}

/// `mu(A)` for `A = C_[1] = [1/2, 1)`.
pub fn mu_a() -> f64 {
    ln_4_3() / LN2
}

/// `mu(C_[1,1]) = mu(A ∩ T^-1 A)`.
pub fn mu_e1() -> f64 {
    (10.0f64 / 9.0).ln() / LN2
}

/// `log(3/2) / 2^(n+2)`, the bound on `|r_n(1/2)|`.
pub fn lemma_bound(n: u32) -> f64 {
    1.5f64.ln() / 2f64.powi(n as i32 + 2)
}

/// A real function on `[0, 1]` that the operators can be applied to.
pub trait Density: Sync {
    fn value(&self, x: f64) -> f64;

    fn slope(&self, x: f64) -> f64 {
        let h = 1e-5;
        if x + h <= 1.0 {
            (-3.0 * self.value(x) + 4.0 * self.value(x + h) - self.value(x + 2.0 * h)) / (2.0 * h)
        } else {
            (3.0 * self.value(x) - 4.0 * self.value(x - h) + self.value(x - 2.0 * h)) / (2.0 * h)
        }
    }

    /// Rough upper estimate of `|f''|` on `[0, width]`.
    fn curvature_near_zero(&self, width: f64) -> f64 {
        let h = 1e-3;
        let second = |x: f64| (self.value(x) - 2.0 * self.value(x + h) + self.value(x + 2.0 * h)).abs() / (h * h);
        2.0 * second(0.0).max(second(width))
    }
}

impl<F: Fn(f64) -> f64 + Sync> Density for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Samples of a function on a uniform grid, with a cubic Hermite interpolant.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    values: Vec<f64>,
    slopes: Vec<f64>,
    cumulative: Vec<f64>,
}

pub const MIN_GRID: usize = 64;

fn fd_slopes(v: &[f64]) -> Vec<f64> {
    let n = v.len() - 1;
    let h = 1.0 / n as f64;
    let c = 12.0 * h;
    (0..=n)
        .map(|i| match i {
            0 => (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / c,
            1 => (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / c,
            i if i == n => {
                (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3] + 3.0 * v[n - 4]) / c
            }
            i if i == n - 1 => {
                (3.0 * v[n] + 10.0 * v[n - 1] - 18.0 * v[n - 2] + 6.0 * v[n - 3] - v[n - 4]) / c
            }
            i => (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / c,
        })
        .collect()
}

impl DensityProfile {
    /// Builds a profile from node values; the grid size is `values.len() - 1`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_GRID + 1 {
            return Err(CfError::domain(format!(
                "a profile needs at least {} nodes, got {}",
                MIN_GRID + 1,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CfError::domain(format!("profile value at node {i} is not finite")));
        }
        let slopes = fd_slopes(&values);
        let h = 1.0 / (values.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for i in 0..values.len() - 1 {
            acc += h * (values[i] + values[i + 1]) / 2.0 + h * h * (slopes[i] - slopes[i + 1]) / 12.0;
            cumulative.push(acc);
        }
        Ok(DensityProfile {
            values,
            slopes,
            cumulative,
        })
    }

    /// Samples `f` at the nodes of an `n`-cell grid.
    pub fn sample(f: &impl Density, n: usize) -> Result<Self> {
        let values = (0..=n).map(|i| f.value(i as f64 / n as f64)).collect();
        DensityProfile::from_values(values)
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.cells() as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.node(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node slopes of the interpolant.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.cells();
        let pos = x.clamp(0.0, 1.0) * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        (i, pos - i as f64)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.step();
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.values[i]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * self.values[i + 1]
            + (s3 - s2) * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.step();
        let s2 = s * s;
        (6.0 * s2 - 6.0 * s) / h * self.values[i]
            + (3.0 * s2 - 4.0 * s + 1.0) * self.slopes[i]
            + (-6.0 * s2 + 6.0 * s) / h * self.values[i + 1]
            + (3.0 * s2 - 2.0 * s) * self.slopes[i + 1]
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.step();
        ((12.0 * s - 6.0) * self.values[i]
            + (6.0 * s - 4.0) * h * self.slopes[i]
            + (-12.0 * s + 6.0) * self.values[i + 1]
            + (6.0 * s - 2.0) * h * self.slopes[i + 1])
            / (h * h)
    }

    /// `∫_0^x` of the interpolant.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.step();
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        self.cumulative[i]
            + h * ((s4 / 2.0 - s3 + s) * self.values[i]
                + (s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0) * h * self.slopes[i]
                + (-s4 / 2.0 + s3) * self.values[i + 1]
                + (s4 / 4.0 - s3 / 3.0) * h * self.slopes[i + 1])
    }

    /// The derivative of the interpolant sampled at the nodes.
    pub fn derivative_profile(&self) -> DensityProfile {
        DensityProfile::from_values(self.slopes.clone()).expect("slopes of a valid profile")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Composite Simpson rule for `∫ self(t) w(t) dt` between two nodes.
    /// Returns the estimate and a Richardson error estimate `|S_h - S_2h| / 15`.
    pub fn simpson(&self, from: usize, to: usize, weight: impl Fn(f64) -> f64) -> (f64, f64) {
        assert!(to > from && (to - from) % 4 == 0, "Simpson range must span a multiple of 4 cells");
        let h = self.step();
        let f = |i: usize| self.values[i] * weight(self.node(i));
        let rule = |stride: usize| {
            let hh = h * stride as f64;
            let mut acc = f(from) + f(to);
            let mut i = from + stride;
            let mut odd = true;
            while i < to {
                acc += if odd { 4.0 } else { 2.0 } * f(i);
                odd = !odd;
                i += stride;
            }
            acc * hh / 3.0
        };
        let fine = rule(1);
        let coarse = rule(2);
        (fine, (fine - coarse).abs() / 15.0)
    }
}

impl Density for DensityProfile {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.derivative(x)
    }

    fn curvature_near_zero(&self, width: f64) -> f64 {
        2.0 * self.second_derivative(0.0).abs().max(self.second_derivative(width).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QuadratureRule {
    /// Composite Simpson on the grid nodes with Richardson error estimate.
    CompositeSimpson,
}

/// Truncation and discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorConfig {
    /// Branches `k = 1..=truncation` are summed explicitly.
    pub truncation: usize,
    /// Number of grid cells `N`.
    pub grid: usize,
    pub quadrature: QuadratureRule,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            truncation: 10_000,
            grid: 2048,
            quadrature: QuadratureRule::CompositeSimpson,
        }
    }
}

impl OperatorConfig {
    pub fn with_grid(self, grid: usize) -> Self {
        OperatorConfig { grid, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < 16 {
            return Err(CfError::domain("series truncation K must be >= 16"));
        }
        if self.grid < MIN_GRID || self.grid % 4 != 0 {
            return Err(CfError::domain("grid size N must be >= 64 and divisible by 4"));
        }
        Ok(())
    }
}

/// An operator image together with a bound on its truncation error.
#[derive(Clone, Debug)]
pub struct Applied {
    pub profile: DensityProfile,
    /// Sup-norm bound on the dropped part of the series.
    pub tail_bound: f64,
}

/// `∑_{k > K} 1 / (k + x)^2 - 1 / (K + 1 + x)`, from the asymptotic
/// expansion of the trigamma function at `z = K + 1 + x`.
fn trigamma_excess(z: f64) -> f64 {
    let z2 = z * z;
    1.0 / (2.0 * z2) + 1.0 / (6.0 * z2 * z) - 1.0 / (30.0 * z2 * z2 * z)
}

/// `(T̂ f)(x) = ∑_k (1+x) / ((k+x)(k+1+x)) f(1/(k+x))` at every node.
pub fn apply_transfer(f: &impl Density, cfg: &OperatorConfig) -> Result<Applied> {
    cfg.validate()?;
    let k_max = cfg.truncation;
    let n = cfg.grid;
    let f0 = f.value(0.0);
    let f1 = f.slope(0.0);
    let curvature = f.curvature_near_zero(1.0 / (k_max as f64 + 1.0));
    let node_value = |x: f64| {
        let mut acc = 0.0;
        for k in (1..=k_max).rev() {
            let a = k as f64 + x;
            acc += (1.0 + x) / (a * (a + 1.0)) * f.value(1.0 / a);
        }
        let z = k_max as f64 + 1.0 + x;
        acc + f0 * (1.0 + x) / z + f1 * (1.0 + x) * trigamma_excess(z)
    };
    let values: Vec<f64> = (0..=n).into_par_iter().map(|i| node_value(i as f64 / n as f64)).collect();
    // second-order residue: (1/2) sup|f''| * sum_{k>K} (1+x)/(k+x)^4
    let kk = k_max as f64;
    let tail_bound = 0.5 * curvature * 2.0 / (3.0 * kk * kk * kk);
    Ok(Applied {
        profile: DensityProfile::from_values(values)?,
        tail_bound,
    })
}

/// `(U g)(x) = ∑_k [ k/(k+1+x)^2 ∫_{1/(k+1+x)}^{1/(k+x)} g + (1+x)/((k+x)^3 (k+1+x)) g(1/(k+x)) ]`.
pub fn apply_wirsing_u(g: &DensityProfile, cfg: &OperatorConfig) -> Result<Applied> {
    cfg.validate()?;
    let k_max = cfg.truncation;
    let n = cfg.grid;
    let node_value = |x: f64| {
        let mut acc = 0.0;
        let mut upper = g.antiderivative(1.0 / (k_max as f64 + 1.0 + x));
        for k in (1..=k_max).rev() {
            let a = k as f64 + x;
            let lower = upper;
            upper = g.antiderivative(1.0 / a);
            let kf = k as f64;
            acc += kf / ((a + 1.0) * (a + 1.0)) * (upper - lower)
                + (1.0 + x) / (a * a * a * (a + 1.0)) * g.eval(1.0 / a);
        }
        acc
    };
    let values: Vec<f64> = (0..=n).into_par_iter().map(|i| node_value(i as f64 / n as f64)).collect();
    let kk = k_max as f64;
    let tail_bound = g.max_abs() * (1.0 / (2.0 * kk * kk) + 2.0 / (3.0 * kk * kk * kk));
    Ok(Applied {
        profile: DensityProfile::from_values(values)?,
        tail_bound,
    })
}

/// `f_1(x) = 1 / ((2 + x) log(4/3))`.
pub fn f1(x: f64) -> f64 {
    1.0 / ((2.0 + x) * ln_4_3())
}

/// `g_1 = f_1' = -1 / ((2 + x)^2 log(4/3))`.
pub fn g1(x: f64) -> f64 {
    -1.0 / ((2.0 + x) * (2.0 + x) * ln_4_3())
}

/// One term `f_n` of the density sequence with its accumulated error bound.
#[derive(Clone, Debug)]
pub struct PipelineStep {
    pub n: u32,
    pub profile: DensityProfile,
    /// Sup-norm bound on the accumulated series truncation error.
    pub tail_error: f64,
}

/// `f_1, ..., f_{n_max}` with `f_{n+1} = T̂ f_n`. The transfer operator is a
/// sup-norm contraction, so per-step tail bounds add.
pub fn density_sequence(n_max: u32, cfg: &OperatorConfig) -> Result<Vec<PipelineStep>> {
    if n_max == 0 {
        return Err(CfError::domain("density index n must be >= 1"));
    }
    cfg.validate()?;
    let mut out = vec![PipelineStep {
        n: 1,
        profile: DensityProfile::sample(&f1, cfg.grid)?,
        tail_error: 0.0,
    }];
    for n in 2..=n_max {
        let applied = if n == 2 {
            apply_transfer(&f1, cfg)?
        } else {
            apply_transfer(&out.last().expect("non-empty").profile, cfg)?
        };
        let prev = out.last().expect("non-empty").tail_error;
        out.push(PipelineStep {
            n,
            profile: applied.profile,
            tail_error: prev + applied.tail_bound,
        });
    }
    Ok(out)
}

/// `f_n = T̂^{n-1} f_1`.
pub fn density_pipeline(n: u32, cfg: &OperatorConfig) -> Result<PipelineStep> {
    Ok(density_sequence(n, cfg)?.pop().expect("non-empty"))
}

/// `m_n(x) = ∫_0^x f_n(t) / (1 + t) dt` at a node index divisible by 4.
pub fn m_at_node(f_n: &DensityProfile, node: usize) -> (f64, f64) {
    f_n.simpson(0, node, |t| 1.0 / (1.0 + t))
}

/// Error budget of an operator-route estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub series_tail: f64,
    pub quadrature: f64,
    /// `|value(N) - value(N/2)|`, a conservative interpolation estimate.
    pub interpolation: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.series_tail + self.quadrature + self.interpolation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorEstimate {
    pub n: u32,
    pub value: f64,
    pub error: ErrorBudget,
}

fn correlation_from_profile(step: &PipelineStep) -> (f64, f64, f64) {
    let n = step.profile.cells();
    let (integral, quad) = step.profile.simpson(n / 2, n, |t| 1.0 / (1.0 + t));
    let mu = mu_a();
    (mu * integral, mu * quad, mu * step.tail_error * ln_4_3())
}

/// `mu(A ∩ T^-n A) = mu(A) (m_n(1) - m_n(1/2))` for `n = 1..=n_max`.
pub fn correlation_sequence(n_max: u32, cfg: &OperatorConfig) -> Result<Vec<OperatorEstimate>> {
    let fine = density_sequence(n_max, cfg)?;
    let coarse = density_sequence(n_max, &cfg.with_grid(cfg.grid / 2))?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| {
            let (value, quadrature, series_tail) = correlation_from_profile(f);
            let (coarse_value, _, _) = correlation_from_profile(c);
            OperatorEstimate {
                n: f.n,
                value,
                error: ErrorBudget {
                    series_tail,
                    quadrature,
                    interpolation: (value - coarse_value).abs(),
                },
            }
        })
        .collect())
}

pub fn correlation_via_operator(n: u32, cfg: &OperatorConfig) -> Result<OperatorEstimate> {
    Ok(correlation_sequence(n, cfg)?.pop().expect("non-empty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub n: u32,
    /// `r_n(1/2) = mu(A) - mu(E_n) / mu(A)`.
    pub r_n_half: f64,
    pub bound: f64,
    pub numerical_error: f64,
    pub pass: bool,
}

impl LemmaReport {
    pub fn from_estimate(est: &OperatorEstimate) -> Self {
        let mu = mu_a();
        let r = mu - est.value / mu;
        let bound = lemma_bound(est.n);
        let numerical_error = est.error.total() / mu;
        LemmaReport {
            n: est.n,
            r_n_half: r,
            bound,
            numerical_error,
            pass: r.abs() <= bound + numerical_error,
        }
    }
}

pub fn verify_lemma_bound(n: u32, cfg: &OperatorConfig) -> Result<LemmaReport> {
    Ok(LemmaReport::from_estimate(&correlation_via_operator(n, cfg)?))
}

/// Result of checking `U b = 1/(2(2+x)^2)` and `U a <= a/2` on the grid,
/// with `a(y) = 1/(y+2)^2` and `b(y) = 1/(1+2y)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionCheck {
    pub max_ub_error: f64,
    /// `min_x (a(x)/2 - (U a)(x))`; positive when the contraction holds.
    pub min_margin: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

pub const UB_TOLERANCE: f64 = 1e-6;

pub fn wirsing_contraction_check(cfg: &OperatorConfig) -> Result<ContractionCheck> {
    let a = |y: f64| 1.0 / ((y + 2.0) * (y + 2.0));
    let b = |y: f64| 1.0 / ((1.0 + 2.0 * y) * (1.0 + 2.0 * y));
    let ua = apply_wirsing_u(&DensityProfile::sample(&a, cfg.grid)?, cfg)?;
    let ub = apply_wirsing_u(&DensityProfile::sample(&b, cfg.grid)?, cfg)?;
    let mut max_ub_error: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for (i, x) in ub.profile.nodes().enumerate() {
        let target = 0.5 * a(x);
        max_ub_error = max_ub_error.max((ub.profile.values()[i] - target).abs());
        min_margin = min_margin.min(target - ua.profile.values()[i]);
    }
    let tail_bound = ua.tail_bound.max(ub.tail_bound);
    Ok(ContractionCheck {
        max_ub_error,
        min_margin,
        tail_bound,
        pass: max_ub_error <= UB_TOLERANCE && min_margin >= -tail_bound,
    })
}

/// `max_x |g_n(x)| / (2^{-(n-1)} |g_1(x)|)` for `n = 1..=n_max`, with `g_n`
/// the derivative of the interpolant of `f_n`. Values `<= 1` confirm the
/// pointwise geometric decay.
pub fn derivative_decay_ratios(n_max: u32, cfg: &OperatorConfig) -> Result<Vec<f64>> {
    let seq = density_sequence(n_max, cfg)?;
    Ok(seq
        .iter()
        .map(|step| {
            let scale = 2f64.powi(-(step.n as i32 - 1));
            step.profile
                .nodes()
                .zip(step.profile.slopes())
                .map(|(x, g)| g.abs() / (scale * g1(x).abs()))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// `mu(E_n)` at several grid sizes.
pub fn refinement_study(n: u32, grids: &[usize], truncation: usize) -> Result<Vec<(usize, f64)>> {
    grids
        .iter()
        .map(|&grid| {
            let cfg = OperatorConfig {
                grid,
                truncation,
                ..OperatorConfig::default()
            };
            let step = density_pipeline(n, &cfg)?;
            Ok((grid, correlation_from_profile(&step).0))
        })
        .collect()
}
