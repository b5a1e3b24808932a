//! The GLK-INAR(1) process `X_t = α∘X_{t-1} + ε_t`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{GlkError, Result};
use crate::glk_dist::{
    CountDistribution, GlkParams, GpParams, TableSampler, SPECIAL_CASE_TOLERANCE,
};
use crate::special_fns::{log_binomial, log_sum_exp_nonempty, stirling};

/// Default number of discarded steps before a stationary path is recorded.
pub const DEFAULT_WARMUP: usize = 1000;

/// Model family, which fixes the free parameters of the innovation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Free `a, b, c, β`.
    Glk,
    /// Lagrangian Katz: `c = β`.
    Lk,
    /// Negative binomial: `b = 0`.
    Nb,
    /// Generalized Poisson innovation `GP(θ, λ)`.
    Gp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Glk, Variant::Lk, Variant::Nb, Variant::Gp];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Glk => "glk",
            Variant::Lk => "lk",
            Variant::Nb => "nb",
            Variant::Gp => "gp",
        }
    }

    /// Names of the free parameters, in storage order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Variant::Glk => &["alpha", "a", "b", "c", "beta"],
            Variant::Lk => &["alpha", "a", "b", "beta"],
            Variant::Nb => &["alpha", "a", "c", "beta"],
            Variant::Gp => &["alpha", "theta", "lambda"],
        }
    }

    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    /// Builds a model from free parameters in [`Variant::param_names`] order.
    pub fn model(self, params: &[f64]) -> Result<InarModel> {
        if params.len() != self.dim() {
            return Err(GlkError::domain(format!(
                "{} model takes {} parameters, got {}",
                self,
                self.dim(),
                params.len()
            )));
        }
        let alpha = params[0];
        let innovation = match self {
            Variant::Glk => Innovation::Glk(GlkParams::new(params[1], params[2], params[3], params[4])?),
            Variant::Lk => Innovation::Glk(GlkParams::new(params[1], params[2], params[3], params[3])?),
            Variant::Nb => Innovation::Glk(GlkParams::new(params[1], 0.0, params[2], params[3])?),
            Variant::Gp => Innovation::Gp(GpParams::new(params[1], params[2])?),
        };
        InarModel::new(alpha, innovation, self)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = GlkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "glk" => Ok(Variant::Glk),
            "lk" => Ok(Variant::Lk),
            "nb" => Ok(Variant::Nb),
            "gp" => Ok(Variant::Gp),
            other => Err(GlkError::Usage(format!(
                "unknown model '{other}', expected one of glk, lk, nb, gp"
            ))),
        }
    }
}

/// Innovation distribution of the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Innovation {
    Glk(GlkParams),
    Gp(GpParams),
}

impl CountDistribution for Innovation {
    fn log_pmf(&self, x: u64) -> f64 {
        match self {
            Innovation::Glk(p) => p.log_pmf(x),
            Innovation::Gp(p) => p.log_pmf(x),
        }
    }

    fn cumulants(&self) -> [f64; 4] {
        match self {
            Innovation::Glk(p) => p.cumulants(),
            Innovation::Gp(p) => p.cumulants(),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Innovation::Glk(p) => p.mean(),
            Innovation::Gp(p) => p.mean(),
        }
    }

    fn variance(&self) -> f64 {
        match self {
            Innovation::Glk(p) => p.variance(),
            Innovation::Gp(p) => p.variance(),
        }
    }
}

/// A GLK-INAR(1) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InarModel {
    alpha: f64,
    innovation: Innovation,
    variant: Variant,
}

impl InarModel {
    pub fn new(alpha: f64, innovation: Innovation, variant: Variant) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GlkError::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        match (variant, &innovation) {
            (Variant::Glk, Innovation::Glk(_)) | (Variant::Gp, Innovation::Gp(_)) => {}
            (Variant::Lk, Innovation::Glk(p)) => {
                if (p.c() - p.beta()).abs() > SPECIAL_CASE_TOLERANCE {
                    return Err(GlkError::domain("LK variant requires c = beta"));
                }
            }
            (Variant::Nb, Innovation::Glk(p)) => {
                if p.b() != 0.0 {
                    return Err(GlkError::domain("NB variant requires b = 0"));
                }
            }
            _ => {
                return Err(GlkError::domain(format!(
                    "innovation family does not match the {variant} variant"
                )))
            }
        }
        Ok(InarModel { alpha, innovation, variant })
    }

    /// General GLK-INAR(1) model.
    pub fn glk(alpha: f64, params: GlkParams) -> Result<Self> {
        InarModel::new(alpha, Innovation::Glk(params), Variant::Glk)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn innovation(&self) -> &Innovation {
        &self.innovation
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Free parameters in [`Variant::param_names`] order.
    pub fn params(&self) -> Vec<f64> {
        match (&self.innovation, self.variant) {
            (Innovation::Glk(p), Variant::Lk) => vec![self.alpha, p.a(), p.b(), p.beta()],
            (Innovation::Glk(p), Variant::Nb) => vec![self.alpha, p.a(), p.c(), p.beta()],
            (Innovation::Glk(p), _) => vec![self.alpha, p.a(), p.b(), p.c(), p.beta()],
            (Innovation::Gp(p), _) => vec![self.alpha, p.theta(), p.lambda()],
        }
    }

    /// `E[X_t] = μ_ε / (1 - α)`.
    pub fn stationary_mean(&self) -> f64 {
        self.innovation.mean() / (1.0 - self.alpha)
    }
}

/// An observed count series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    values: Vec<u64>,
    timestamps: Option<Vec<String>>,
}

impl CountSeries {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GlkError::domain("count series is empty"));
        }
        Ok(CountSeries { values, timestamps: None })
    }

    /// Series with labels that must be strictly increasing.
    pub fn with_timestamps(values: Vec<u64>, timestamps: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(GlkError::domain("count series is empty"));
        }
        if timestamps.len() != values.len() {
            return Err(GlkError::domain(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(GlkError::domain(format!(
                "timestamps not strictly increasing at '{}' -> '{}'",
                w[0], w[1]
            )));
        }
        Ok(CountSeries { values, timestamps: Some(timestamps) })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// Binomial thinning `α∘x`.
pub fn thin<R: Rng + ?Sized>(alpha: f64, x: u64, rng: &mut R) -> u64 {
    assert!((0.0..=1.0).contains(&alpha), "thinning probability {alpha} outside [0, 1]");
    if x == 0 || alpha == 0.0 {
        return 0;
    }
    if alpha == 1.0 {
        return x;
    }
    Binomial::new(x, alpha).expect("valid binomial").sample(rng)
}

/// How a simulated path begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// `X_0` fixed; the first recorded value is `X_1`.
    Value(u64),
    /// Run `warmup` unrecorded steps from `⌈μ_X⌉`.
    Stationary { warmup: usize },
}

impl Default for Start {
    fn default() -> Self {
        Start::Stationary { warmup: DEFAULT_WARMUP }
    }
}

/// Simulates `length` steps of the process.
pub fn simulate<R: Rng + ?Sized>(
    model: &InarModel,
    length: usize,
    start: Start,
    rng: &mut R,
) -> Result<CountSeries> {
    if length == 0 {
        return Err(GlkError::Usage("path length must be positive".into()));
    }
    let sampler = TableSampler::new(model.innovation())?;
    let alpha = model.alpha();
    let step = |x: u64, rng: &mut R| thin(alpha, x, rng) + sampler.sample(rng);
    let mut x = match start {
        Start::Value(x0) => x0,
        Start::Stationary { warmup } => {
            let mut x = model.stationary_mean().ceil() as u64;
            for _ in 0..warmup {
                x = step(x, rng);
            }
            x
        }
    };
    let mut values = Vec::with_capacity(length);
    for _ in 0..length {
        x = step(x, rng);
        values.push(x);
    }
    CountSeries::new(values)
}

/// `ln P(X_t = j | X_{t-1} = i)`, summed in log space.
pub fn transition_log_prob(model: &InarModel, i: u64, j: u64) -> f64 {
    let alpha = model.alpha();
    let (ln_a, ln_1ma) = (alpha.ln(), (-alpha).ln_1p());
    let terms: Vec<f64> = (0..=i.min(j))
        .map(|k| {
            log_binomial(i, k)
                + k as f64 * ln_a
                + (i - k) as f64 * ln_1ma
                + model.innovation().log_pmf(j - k)
        })
        .collect();
    log_sum_exp_nonempty(&terms)
}

/// Transition probabilities with a cached innovation pmf on `0..=max_value`.
///
/// Rows are accumulated in linear space, falling back to log space when a
/// row would underflow.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    alpha: f64,
    ln_alpha: f64,
    ln_1m_alpha: f64,
    innov_log: Vec<f64>,
    innov: Vec<f64>,
}

/// Below this the linear-space row sum is recomputed in log space.
const LINEAR_FLOOR: f64 = 1e-280;

impl TransitionKernel {
    pub fn new(model: &InarModel, max_value: u64) -> Self {
        let innov_log: Vec<f64> =
            (0..=max_value).map(|x| model.innovation().log_pmf(x)).collect();
        let innov = innov_log.iter().map(|l| l.exp()).collect();
        let alpha = model.alpha();
        TransitionKernel {
            alpha,
            ln_alpha: alpha.ln(),
            ln_1m_alpha: (-alpha).ln_1p(),
            innov_log,
            innov,
        }
    }

    pub fn max_value(&self) -> u64 {
        self.innov.len() as u64 - 1
    }

    /// Binomial(i, α) masses in linear space, or `None` if they underflow.
    fn binomial_row(&self, i: u64, out: &mut Vec<f64>) -> bool {
        out.clear();
        let lead = i as f64 * self.ln_1m_alpha;
        if lead < -700.0 {
            return false;
        }
        let odds = self.alpha / (1.0 - self.alpha);
        let mut b = lead.exp();
        out.push(b);
        for k in 0..i {
            b *= (i - k) as f64 / (k + 1) as f64 * odds;
            out.push(b);
        }
        true
    }

    fn log_prob_slow(&self, i: u64, j: u64) -> f64 {
        let terms: Vec<f64> = (0..=i.min(j))
            .map(|k| {
                log_binomial(i, k)
                    + k as f64 * self.ln_alpha
                    + (i - k) as f64 * self.ln_1m_alpha
                    + self.innov_log[(j - k) as usize]
            })
            .collect();
        log_sum_exp_nonempty(&terms)
    }

    fn log_prob_with_row(&self, row: Option<&[f64]>, i: u64, j: u64) -> f64 {
        if let Some(row) = row {
            let top = i.min(j) as usize;
            let ju = j as usize;
            let mut s = 0.0;
            for (k, b) in row[..=top].iter().enumerate() {
                s += b * self.innov[ju - k];
            }
            if s > LINEAR_FLOOR {
                return s.ln();
            }
        }
        self.log_prob_slow(i, j)
    }

    /// `ln P(j | i)`; requires `j <= max_value`.
    pub fn log_prob(&self, i: u64, j: u64) -> f64 {
        assert!(j <= self.max_value(), "state {j} beyond kernel support");
        let mut row = Vec::new();
        let ok = self.binomial_row(i, &mut row);
        self.log_prob_with_row(ok.then_some(&row[..]), i, j)
    }

    /// Row `P(· | i)` on `0..=max_value`.
    pub fn row(&self, i: u64) -> Vec<f64> {
        let mut binom = Vec::new();
        let ok = self.binomial_row(i, &mut binom);
        (0..=self.max_value())
            .map(|j| self.log_prob_with_row(ok.then_some(&binom[..]), i, j).exp())
            .collect()
    }

    /// Conditional log-likelihood of a set of grouped transitions.
    pub fn log_likelihood(&self, counts: &TransitionCounts) -> f64 {
        let mut binom = Vec::new();
        let mut total = 0.0;
        for (i, targets) in &counts.groups {
            let ok = self.binomial_row(*i, &mut binom);
            let row = ok.then_some(&binom[..]);
            for &(j, n) in targets {
                total += n as f64 * self.log_prob_with_row(row, *i, j);
            }
        }
        total
    }
}

/// Observed transitions `(x_{t-1}, x_t)` grouped by origin, with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    groups: Vec<(u64, Vec<(u64, u64)>)>,
    max_value: u64,
    transitions: usize,
}

impl TransitionCounts {
    pub fn from_series(series: &CountSeries) -> Self {
        let mut pairs: Vec<(u64, u64)> =
            series.values().windows(2).map(|w| (w[0], w[1])).collect();
        let transitions = pairs.len();
        pairs.sort_unstable();
        let mut groups: Vec<(u64, Vec<(u64, u64)>)> = Vec::new();
        for (i, j) in pairs {
            match groups.last_mut() {
                Some((gi, targets)) if *gi == i => match targets.last_mut() {
                    Some((gj, n)) if *gj == j => *n += 1,
                    _ => targets.push((j, 1)),
                },
                _ => groups.push((i, vec![(j, 1)])),
            }
        }
        TransitionCounts { groups, max_value: series.max_value(), transitions }
    }

    pub fn max_value(&self) -> u64 {
        self.max_value
    }

    /// Number of transitions, `T - 1`.
    pub fn transitions(&self) -> usize {
        self.transitions
    }
}

/// Mean and variance of `X_{t+k}` given `X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalMoments {
    pub horizon: u32,
    pub mean: f64,
    pub variance: f64,
}

/// k-step conditional mean and variance.
///
/// The mean carries the geometric factor `(1 - α^k)/(1 - α)` on the innovation
/// mean, so `k = 1` gives `α x + μ_ε` and `k → ∞` the stationary mean.
pub fn conditional_moments(model: &InarModel, x_t: u64, k: u32) -> Result<ConditionalMoments> {
    if k == 0 {
        return Err(GlkError::domain("horizon k must be positive"));
    }
    let alpha = model.alpha();
    let mu = model.innovation().mean();
    let var = model.innovation().variance();
    let ak = alpha.powi(k as i32);
    let x = x_t as f64;
    let mean = ak * x + (1.0 - ak) / (1.0 - alpha) * mu;
    let variance = (ak - ak * ak) * x
        + (1.0 - ak * ak) / (1.0 - alpha * alpha) * (var - mu)
        + (1.0 - ak) / (1.0 - alpha) * mu;
    Ok(ConditionalMoments { horizon: k, mean, variance })
}

/// Highest moment order supported by [`stationary_moments`].
pub const MAX_MOMENT_ORDER: usize = 4;

/// Moments of the stationary marginal distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryMoments {
    pub alpha: f64,
    pub mean: f64,
    pub variance: f64,
    pub vmr: f64,
    /// `E[X^m]` for `m = 1..=max_order`.
    pub raw: Vec<f64>,
    /// `E[X(X-1)...(X-m+1)]` for `m = 1..=max_order`.
    pub factorial: Vec<f64>,
}

impl StationaryMoments {
    /// `γ_k = α^k σ_X²`.
    pub fn autocovariance(&self, lag: u32) -> f64 {
        self.alpha.powi(lag as i32) * self.variance
    }

    pub fn autocorrelation(&self, lag: u32) -> f64 {
        self.alpha.powi(lag as i32)
    }
}

/// Falling-factorial moments from raw moments `E[X^1..]`.
pub fn falling_from_raw(raw: &[f64]) -> Vec<f64> {
    let s = stirling();
    (1..=raw.len())
        .map(|m| (1..=m).map(|k| s.first(m, k) as f64 * raw[k - 1]).sum())
        .collect()
}

/// Raw moments from falling-factorial moments.
pub fn raw_from_falling(falling: &[f64]) -> Vec<f64> {
    let s = stirling();
    (1..=falling.len())
        .map(|m| (1..=m).map(|k| s.second(m, k) as f64 * falling[k - 1]).sum())
        .collect()
}

/// Stationary moments up to `max_order` (at most 4).
///
/// Factorial moments follow
/// `μ_X^{(m)} = (1 - α^m)^{-1} Σ_{k<m} C(m,k) α^k μ_X^{(k)} μ_ε^{(m-k)}`, the
/// factorial-moment form of `X =_d α∘X + ε`.
pub fn stationary_moments(model: &InarModel, max_order: usize) -> Result<StationaryMoments> {
    if max_order == 0 || max_order > MAX_MOMENT_ORDER {
        return Err(GlkError::config(format!(
            "stationary moment order must lie in 1..={MAX_MOMENT_ORDER}, got {max_order}"
        )));
    }
    let alpha = model.alpha();
    let innov = model.innovation();
    let eps_raw = innov.raw_moments();
    let eps_fact = falling_from_raw(&eps_raw);
    // index 0 holds the zeroth factorial moment, 1
    let mut fact = vec![1.0];
    for m in 1..=MAX_MOMENT_ORDER {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..m {
            let eps = if m - k == 0 { 1.0 } else { eps_fact[m - k - 1] };
            acc += binom * alpha.powi(k as i32) * fact[k] * eps;
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        fact.push(acc / (1.0 - alpha.powi(m as i32)));
    }
    let fact = fact[1..].to_vec();
    let raw = raw_from_falling(&fact);
    let mean = innov.mean() / (1.0 - alpha);
    let variance = (innov.variance() + alpha * innov.mean()) / (1.0 - alpha * alpha);
    let vmr_eps = innov.variance() / innov.mean();
    Ok(StationaryMoments {
        alpha,
        mean,
        variance,
        vmr: (vmr_eps + alpha) / (1.0 + alpha),
        raw: raw[..max_order].to_vec(),
        factorial: fact[..max_order].to_vec(),
    })
}

/// Stationary distribution on `0..=N` by power iteration of the truncated,
/// row-normalized transition matrix.
///
/// `N` is the innovation support at `mass_tolerance` divided by `1 - α`.
pub fn stationary_distribution(model: &InarModel, mass_tolerance: f64) -> Result<Vec<f64>> {
    let table = model.innovation().pmf_table(mass_tolerance)?;
    let n = (table.max_support() as f64 / (1.0 - model.alpha())).ceil() as u64;
    let kernel = TransitionKernel::new(model, n);
    let size = n as usize + 1;
    let mut matrix = Vec::with_capacity(size * size);
    for i in 0..=n {
        let mut row = kernel.row(i);
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
        matrix.extend(row);
    }
    let mut pi = vec![0.0; size];
    let start = (model.stationary_mean().ceil() as usize).min(size - 1);
    pi[start] = 1.0;
    let mut next = vec![0.0; size];
    for _ in 0..100_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = &matrix[i * size..(i + 1) * size];
            for (acc, p) in next.iter_mut().zip(row) {
                *acc += w * p;
            }
        }
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < 1e-15 {
            return Ok(pi);
        }
    }
    Err(GlkError::numerical("power iteration did not converge"))
}

/// Two-sample chi-square homogeneity test on count histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Compares the histograms of two samples, pooling adjacent cells until each
/// pooled cell holds at least 10 observations.
pub fn two_sample_chi_square(x: &[u64], y: &[u64]) -> Result<ChiSquareTest> {
    if x.is_empty() || y.is_empty() {
        return Err(GlkError::domain("chi-square test needs two non-empty samples"));
    }
    let top = x.iter().chain(y).copied().max().unwrap_or(0) as usize;
    let mut hx = vec![0u64; top + 1];
    let mut hy = vec![0u64; top + 1];
    x.iter().for_each(|&v| hx[v as usize] += 1);
    y.iter().for_each(|&v| hy[v as usize] += 1);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut cx, mut cy) = (0u64, 0u64);
    for (a, b) in hx.iter().zip(&hy) {
        cx += a;
        cy += b;
        if cx + cy >= 10 {
            cells.push((cx as f64, cy as f64));
            cx = 0;
            cy = 0;
        }
    }
    if cx + cy > 0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += cx as f64;
                last.1 += cy as f64;
            }
            None => cells.push((cx as f64, cy as f64)),
        }
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (k1, k2) = ((n2 / n1).sqrt(), (n1 / n2).sqrt());
    let statistic: f64 = cells
        .iter()
        .map(|&(a, b)| (k1 * a - k2 * b).powi(2) / (a + b))
        .sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).map_err(|e| GlkError::numerical(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquareTest { statistic, df, p_value })
}

/// The process whose path is the sum of independent paths of `models`.
///
/// All models must share `α, b, c, β`; the aggregate has `a = Σ a_j`.
pub fn aggregate_model(models: &[InarModel]) -> Result<InarModel> {
    let first = models.first().ok_or_else(|| GlkError::domain("no models to aggregate"))?;
    let Innovation::Glk(base) = first.innovation() else {
        return Err(GlkError::domain("aggregation requires GLK innovations"));
    };
    let mut total_a = 0.0;
    for m in models {
        let Innovation::Glk(p) = m.innovation() else {
            return Err(GlkError::domain("aggregation requires GLK innovations"));
        };
        let shared = m.alpha() == first.alpha()
            && p.b() == base.b()
            && p.c() == base.c()
            && p.beta() == base.beta();
        if !shared {
            return Err(GlkError::domain("aggregated models must share alpha, b, c and beta"));
        }
        total_a += p.a();
    }
    InarModel::new(first.alpha(), Innovation::Glk(base.with_a(total_a)?), first.variant())
}

/// Outcome of comparing an aggregated path with a path of the aggregate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregationReport {
    pub components: usize,
    /// Spacing between compared observations.
    pub stride: usize,
    pub test: ChiSquareTest,
}

/// Simulates `Y_t = Σ_j X_{jt}` and a path of [`aggregate_model`], both of
/// `length` steps, and compares their marginal histograms.
///
/// Observations are taken every `s` steps with `α^s <= 0.01`, so that the
/// chi-square test sees nearly independent draws.
pub fn aggregate<R: Rng + ?Sized>(
    models: &[InarModel],
    length: usize,
    rng: &mut R,
) -> Result<AggregationReport> {
    let combined = aggregate_model(models)?;
    let mut summed = vec![0u64; length];
    for m in models {
        let path = simulate(m, length, Start::default(), rng)?;
        summed.iter_mut().zip(path.values()).for_each(|(s, v)| *s += v);
    }
    let direct = simulate(&combined, length, Start::default(), rng)?;
    let alpha = combined.alpha();
    let stride = ((0.01f64).ln() / alpha.ln()).ceil().max(1.0) as usize;
    let pick = |v: &[u64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
    let test = two_sample_chi_square(&pick(&summed), &pick(direct.values()))?;
    Ok(AggregationReport { components: models.len(), stride, test })
}
