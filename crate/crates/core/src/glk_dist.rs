//! The Generalized Lagrangian Katz (GLK) distribution and its Generalized
//! Poisson limit.
//!
//! GLK(a, b, c, β) is the Lagrangian distribution generated by
//! `f(z) = ((1-β)/(1-βz))^{a/c}` and transformer `g(z) = ((1-β)/(1-βz))^{b/c}`.
//! The pmf is evaluated in log space; moments come from the cumulants of the
//! Lagrangian expansion, which nest the negative binomial (`b = 0`), the
//! Katz and Lagrangian Katz (`c = β`) families.

use rand::Rng;
use serde::Serialize;

use crate::error::{GlkError, Result};
use crate::special_fns::{log_factorial, log_rising_factorial_unchecked};

/// Default cap on the support of a tabulated pmf.
pub const DEFAULT_SUPPORT_CAP: usize = 100_000;

/// Mass tolerance used by the samplers.
pub const SAMPLER_MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance for classifying `c = β`.
pub const SPECIAL_CASE_TOLERANCE: f64 = 1e-12;

/// Discrete distribution on the nonnegative integers with a log-space pmf.
pub trait CountDistribution {
    fn log_pmf(&self, x: u64) -> f64;

    /// First four cumulants.
    fn cumulants(&self) -> [f64; 4];

    fn pmf(&self, x: u64) -> f64 {
        self.log_pmf(x).exp()
    }

    fn mean(&self) -> f64 {
        self.cumulants()[0]
    }

    fn variance(&self) -> f64 {
        self.cumulants()[1]
    }

    /// Raw moments `E[X^m]` for `m = 1..=4`.
    fn raw_moments(&self) -> [f64; 4] {
        raw_from_cumulants(self.cumulants())
    }

    /// Tabulates `p_0..p_N` until the cumulative mass reaches `1 - mass_tolerance`.
    fn pmf_table(&self, mass_tolerance: f64) -> Result<PmfTable> {
        self.pmf_table_capped(mass_tolerance, DEFAULT_SUPPORT_CAP)
    }

    fn pmf_table_capped(&self, mass_tolerance: f64, cap: usize) -> Result<PmfTable> {
        tabulate(|x| self.log_pmf(x), self.mean(), mass_tolerance, cap)
    }
}

/// Converts the first four cumulants into raw moments.
pub fn raw_from_cumulants(k: [f64; 4]) -> [f64; 4] {
    let [k1, k2, k3, k4] = k;
    [
        k1,
        k2 + k1 * k1,
        k3 + 3.0 * k2 * k1 + k1.powi(3),
        k4 + 4.0 * k3 * k1 + 3.0 * k2 * k2 + 6.0 * k2 * k1 * k1 + k1.powi(4),
    ]
}

/// Cumulants of a Lagrangian distribution whose cumulant generating function
/// is `K(t) = r φ(w(t))` with `w = t + s φ(w)`, where `base` holds the first
/// four derivatives of `φ` at zero.
///
/// Obtained by implicit differentiation of `w(t)`; the GLK uses the
/// geometric cumulant function and the Generalized Poisson the Poisson one.
fn lagrangian_cumulants(r: f64, s: f64, base: [f64; 4]) -> [f64; 4] {
    let [p1, p2, p3, p4] = base;
    let w1 = 1.0 / (1.0 - s * p1);
    let w2 = s * p2 * w1.powi(3);
    let w3 = s * (p3 * w1.powi(3) + 3.0 * p2 * w1 * w2) * w1;
    let w4 = s
        * (p4 * w1.powi(4) + 6.0 * p3 * w1 * w1 * w2 + 3.0 * p2 * w2 * w2 + 4.0 * p2 * w1 * w3)
        * w1;
    [
        r * p1 * w1,
        r * (p2 * w1 * w1 + p1 * w2),
        r * (p3 * w1.powi(3) + 3.0 * p2 * w1 * w2 + p1 * w3),
        r * (p4 * w1.powi(4) + 6.0 * p3 * w1 * w1 * w2 + 3.0 * p2 * w2 * w2 + 4.0 * p2 * w1 * w3 + p1 * w4),
    ]
}

/// A finite window `p_0..p_N` of a pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfTable {
    pub probs: Vec<f64>,
    /// Total mass captured by `probs`.
    pub mass: f64,
    /// Set when the support cap was hit before the tolerance was met.
    pub truncated: bool,
}

impl PmfTable {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the last tabulated mass point.
    pub fn max_support(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }
}

fn tabulate(
    log_pmf: impl Fn(u64) -> f64,
    mean: f64,
    mass_tolerance: f64,
    cap: usize,
) -> Result<PmfTable> {
    if !(mass_tolerance > 0.0 && mass_tolerance < 1.0) {
        return Err(GlkError::config(format!(
            "mass tolerance must lie in (0, 1), got {mass_tolerance}"
        )));
    }
    if cap == 0 {
        return Err(GlkError::config("support cap must be positive"));
    }
    let target = 1.0 - mass_tolerance;
    let mut probs = Vec::new();
    // Neumaier-compensated running mass
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut x = 0u64;
    loop {
        let p = log_pmf(x).exp();
        probs.push(p);
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
        let mass = sum + comp;
        if mass >= target {
            return Ok(PmfTable { probs, mass, truncated: false });
        }
        // underflowed tail beyond the mean: nothing left to accumulate
        if p == 0.0 && (x as f64) > mean {
            return Ok(PmfTable { probs, mass, truncated: true });
        }
        if probs.len() >= cap {
            log::warn!("pmf table hit the support cap {cap} with mass {mass}");
            return Ok(PmfTable { probs, mass, truncated: true });
        }
        x += 1;
    }
}

/// Family a GLK parameter tuple reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpecialCase {
    /// `b = 0`: negative binomial with `r = a/c` and success probability `p = 1 - β`.
    NegativeBinomial { r: f64, p: f64 },
    /// `c = β`.
    LagrangianKatz,
    /// `b = 0` and `c = β`.
    Katz,
    GeneralGlk,
}

/// Parameters of GLK(a, b, c, β) on the region `a, c > 0`, `b >= 0`,
/// `0 < β < 1` with `κ = 1 - β - bβ/c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlkParams {
    a: f64,
    b: f64,
    c: f64,
    beta: f64,
}

impl GlkParams {
    pub fn new(a: f64, b: f64, c: f64, beta: f64) -> Result<Self> {
        let finite = [a, b, c, beta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GlkError::domain("GLK parameters must be finite"));
        }
        if a <= 0.0 {
            return Err(GlkError::domain(format!("GLK requires a > 0, got {a}")));
        }
        if b < 0.0 {
            return Err(GlkError::domain(format!("GLK requires b >= 0, got {b}")));
        }
        if c <= 0.0 {
            return Err(GlkError::domain(format!("GLK requires c > 0, got {c}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(GlkError::domain(format!("GLK requires 0 < beta < 1, got {beta}")));
        }
        let params = GlkParams { a, b, c, beta };
        let kappa = params.kappa();
        if kappa <= 0.0 {
            return Err(GlkError::domain(format!(
                "GLK requires kappa = 1 - beta - b*beta/c > 0, got {kappa}"
            )));
        }
        Ok(params)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `κ = 1 - β - bβ/c`.
    pub fn kappa(&self) -> f64 {
        1.0 - self.beta - self.b * self.beta / self.c
    }

    /// `θ = β/c`.
    pub fn theta(&self) -> f64 {
        self.beta / self.c
    }

    /// Same `b, c, β` with `a` replaced.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        GlkParams::new(a, self.b, self.c, self.beta)
    }

    pub fn moments(&self) -> GlkMoments {
        glk_moments(self)
    }

    pub fn pgf(&self, u: f64) -> Result<f64> {
        glk_pgf(self, u)
    }

    pub fn special_case(&self) -> SpecialCase {
        special_case_of(self)
    }
}

impl CountDistribution for GlkParams {
    fn log_pmf(&self, x: u64) -> f64 {
        glk_log_pmf(self, x)
    }

    fn cumulants(&self) -> [f64; 4] {
        // geometric cumulants of q/(1-q) with q = β
        let q = self.beta;
        let p = 1.0 - q;
        let base = [
            q / p,
            q / (p * p),
            q * (1.0 + q) / p.powi(3),
            q * (1.0 + 4.0 * q + q * q) / p.powi(4),
        ];
        lagrangian_cumulants(self.a / self.c, self.b / self.c, base)
    }

    fn mean(&self) -> f64 {
        self.a * self.theta() / self.kappa()
    }

    fn variance(&self) -> f64 {
        (1.0 - self.beta) * self.a * self.theta() / self.kappa().powi(3)
    }
}

/// `ln p_x` for GLK(a, b, c, β).
pub fn glk_log_pmf(params: &GlkParams, x: u64) -> f64 {
    let GlkParams { a, b, c, beta } = *params;
    let xf = x as f64;
    let ratio = a / c;
    let shape = ratio + xf * b / c;
    xf * beta.ln() + ratio.ln() - (shape + xf).ln()
        + shape * (-beta).ln_1p()
        + log_rising_factorial_unchecked(shape + 1.0, x)
        - log_factorial(x)
}

/// Tabulated GLK pmf with the default support cap.
pub fn glk_pmf_table(params: &GlkParams, mass_tolerance: f64) -> Result<PmfTable> {
    params.pmf_table(mass_tolerance)
}

/// Katz-type product recursion that clamps negative ratios to zero.
///
/// `p_i ∝ Π_{j<i} max{0, (U + V j)/(a + j)}` with `U = aβ/c` and
/// `V = U (b + c)/(a + b)`, normalized over `0..=max_support`. `b` may be
/// negative. For `b = 0` this coincides with the GLK pmf only when `a = 1`,
/// so it is an opt-in alternative and never the default pmf.
pub fn glk_truncated_pmf_recursion(
    a: f64,
    b: f64,
    c: f64,
    beta: f64,
    max_support: usize,
) -> Result<Vec<f64>> {
    if !(a > 0.0 && c > 0.0 && beta > 0.0 && beta < 1.0 && b.is_finite()) {
        return Err(GlkError::domain(
            "truncated recursion requires a > 0, c > 0, 0 < beta < 1 and finite b",
        ));
    }
    if a + b == 0.0 {
        return Err(GlkError::domain("truncated recursion is undefined for a + b = 0"));
    }
    let u = a * beta / c;
    let v = u * (b + c) / (a + b);
    let mut weights = Vec::with_capacity(max_support + 1);
    let mut w = 1.0;
    weights.push(w);
    for j in 0..max_support {
        let jf = j as f64;
        let ratio = ((u + v * jf) / (a + jf)).max(0.0);
        w *= ratio;
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(GlkError::numerical("truncated recursion weights overflowed"));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Moments and shape statistics of a GLK distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlkMoments {
    pub mean: f64,
    pub variance: f64,
    /// Third central moment.
    pub mu3: f64,
    /// Fourth central moment.
    pub mu4: f64,
    pub cv: f64,
    pub vmr: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Mean, central moments and shape statistics.
///
/// `VMR = (1-β)/κ²` exceeds one on the whole admissible region `b >= 0`, so
/// the family is over-dispersed only. With `b = 0` it reduces to
/// `1/(1-β)`: GLK(3.86, 0, 0.60, 0.70) has VMR 50/15, and no choice of `β`
/// turns GLK(25, 0, 0.70, β) under-dispersed (VMR 13/15 is out of reach).
///
/// ```
/// use glk_inar::glk_dist::GlkParams;
///
/// let m = GlkParams::new(3.86, 0.0, 0.60, 0.70).unwrap().moments();
/// assert!((m.vmr - 50.0 / 15.0).abs() < 1e-12);
///
/// for k in 1..1000 {
///     let beta = k as f64 / 1000.0;
///     let m = GlkParams::new(25.0, 0.0, 0.70, beta).unwrap().moments();
///     assert!(m.vmr > 1.0);
///     assert!((m.vmr - 13.0 / 15.0).abs() > 0.1);
/// }
/// ```
pub fn glk_moments(params: &GlkParams) -> GlkMoments {
    let GlkParams { a, b, c, beta } = *params;
    let kappa = params.kappa();
    let theta = params.theta();
    let mean = a * theta / kappa;
    let variance = (1.0 - beta) * a * theta / kappa.powi(3);
    let mu3 = a * theta * (1.0 - 2.0 * beta) * (1.0 - beta) / kappa.powi(4)
        + 3.0 * a * theta * theta * (1.0 - beta).powi(2) * (b + c) / kappa.powi(5);
    let k4 = params.cumulants()[3];
    let mu4 = k4 + 3.0 * variance * variance;
    GlkMoments {
        mean,
        variance,
        mu3,
        mu4,
        cv: ((1.0 - beta) / (a * theta * kappa)).sqrt(),
        vmr: (1.0 - beta) / (kappa * kappa),
        skewness: mu3 / variance.powf(1.5),
        kurtosis: mu4 / (variance * variance),
    }
}

/// Maximum fixed-point iterations for the pgf.
const PGF_MAX_ITER: usize = 10_000;
const PGF_TOLERANCE: f64 = 1e-14;

/// Probability generating function `H(u)` on `[0, 1]`.
///
/// Solves the Lagrange equation `z = u g(z)` with transformer
/// `g(z) = ((1-β)/(1-βz))^{b/c}` by fixed-point iteration from `z = 0`, halving
/// the step once successive residuals change sign, then returns
/// `((1-β)/(1-βz))^{a/c}`. Starting at zero picks the smallest root, which is
/// the one analytic at `u = 0`.
pub fn glk_pgf(params: &GlkParams, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(GlkError::domain(format!("pgf argument must lie in [0, 1], got {u}")));
    }
    let GlkParams { a, b, c, beta } = *params;
    let exponent = b / c;
    let map = |z: f64| u * ((1.0 - beta) / (1.0 - beta * z)).powf(exponent);
    let mut z = 0.0;
    let mut damping = 1.0;
    let mut prev_residual = 0.0f64;
    let mut converged = false;
    for _ in 0..PGF_MAX_ITER {
        let residual = map(z) - z;
        if residual.abs() < PGF_TOLERANCE {
            converged = true;
            break;
        }
        if residual * prev_residual < 0.0 {
            damping = 0.5;
        }
        z += damping * residual;
        prev_residual = residual;
    }
    if !converged {
        return Err(GlkError::numerical(format!(
            "pgf fixed point did not converge within {PGF_MAX_ITER} iterations at u = {u}"
        )));
    }
    // the stopping rule bounds the residual, not the error in z; two Newton
    // steps remove the remaining linear-rate lag
    for _ in 0..2 {
        let g = ((1.0 - beta) / (1.0 - beta * z)).powf(exponent);
        let slope = u * exponent * beta / (1.0 - beta * z) * g;
        let step = (z - u * g) / (1.0 - slope);
        if step.is_finite() {
            z -= step;
        }
    }
    Ok(((1.0 - beta) / (1.0 - beta * z)).powf(a / c))
}

/// Classifies the special family a parameter tuple belongs to.
pub fn special_case_of(params: &GlkParams) -> SpecialCase {
    let b_zero = params.b == 0.0;
    let lagrangian_katz = (params.c - params.beta).abs() <= SPECIAL_CASE_TOLERANCE;
    match (b_zero, lagrangian_katz) {
        (true, true) => SpecialCase::Katz,
        (true, false) => SpecialCase::NegativeBinomial {
            r: params.a / params.c,
            p: 1.0 - params.beta,
        },
        (false, true) => SpecialCase::LagrangianKatz,
        (false, false) => SpecialCase::GeneralGlk,
    }
}

/// Inversion sampler over a tabulated pmf.
#[derive(Debug, Clone)]
pub struct TableSampler {
    cdf: Vec<f64>,
    truncated: bool,
}

impl TableSampler {
    pub fn new<D: CountDistribution + ?Sized>(dist: &D) -> Result<Self> {
        let table = dist.pmf_table(SAMPLER_MASS_TOLERANCE)?;
        if table.truncated {
            log::warn!(
                "sampler pmf table truncated at {} with mass {}",
                table.max_support(),
                table.mass
            );
        }
        let mut acc = 0.0;
        let cdf = table
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(TableSampler { cdf, truncated: table.truncated })
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Largest value the sampler can return.
    pub fn max_value(&self) -> u64 {
        self.cdf.len().saturating_sub(1) as u64
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }
}

/// `n` independent GLK draws.
pub fn glk_sample<R: Rng + ?Sized>(params: &GlkParams, rng: &mut R, n: usize) -> Result<Vec<u64>> {
    let sampler = TableSampler::new(params)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

/// Generalized Poisson GP(θ, λ) with pmf `θ(θ+λx)^{x-1} e^{-θ-λx}/x!`.
///
/// This is the `c → 0` limit of GLK(a, b, c, β) with `θ = aβ/c` and
/// `λ = bβ/c` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpParams {
    theta: f64,
    lambda: f64,
}

impl GpParams {
    pub fn new(theta: f64, lambda: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(GlkError::domain(format!("GP requires theta > 0, got {theta}")));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(GlkError::domain(format!("GP requires 0 <= lambda < 1, got {lambda}")));
        }
        Ok(GpParams { theta, lambda })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// GP limit parameters for a GLK tuple.
    pub fn limit_of(glk: &GlkParams) -> Result<Self> {
        GpParams::new(glk.a() * glk.theta(), glk.b() * glk.theta())
    }
}

impl CountDistribution for GpParams {
    fn log_pmf(&self, x: u64) -> f64 {
        gp_log_pmf(self, x)
    }

    fn cumulants(&self) -> [f64; 4] {
        lagrangian_cumulants(self.theta, self.lambda, [1.0; 4])
    }
}

pub fn gp_log_pmf(params: &GpParams, x: u64) -> f64 {
    let GpParams { theta, lambda } = *params;
    let xf = x as f64;
    let rate = theta + lambda * xf;
    theta.ln() + (xf - 1.0) * rate.ln() - rate - log_factorial(x)
}
