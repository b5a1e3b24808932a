//! Priors, reparametrization, posterior and the adaptive random-walk
//! Metropolis sampler.
//!
//! Unit-interval parameters (`α`, `β`, and `λ` for the GP variant) are mapped
//! through the logit, all others through the log, so the sampler moves on
//! `R^q`. The posterior in `η` carries the log-Jacobian of the inverse map.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::acf;
use crate::error::{GlkError, Result};
use crate::inar::{CountSeries, InarModel, TransitionCounts, TransitionKernel, Variant};
use crate::special_fns::log_gamma;

/// Hyperparameters of the independent priors. Gamma priors use shape and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    pub alpha_shape1: f64,
    pub alpha_shape2: f64,
    pub a_shape: f64,
    pub a_scale: f64,
    pub b_shape: f64,
    pub b_scale: f64,
    pub c_shape: f64,
    pub c_scale: f64,
    pub beta_shape1: f64,
    pub beta_shape2: f64,
    /// Gamma prior on `θ` of the GP variant.
    pub theta_shape: f64,
    pub theta_scale: f64,
    /// Beta prior on `λ` of the GP variant.
    pub lambda_shape1: f64,
    pub lambda_shape2: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            alpha_shape1: 1.0,
            alpha_shape2: 1.0,
            a_shape: 1.0,
            a_scale: 1.0,
            b_shape: 2.0,
            b_scale: 0.5,
            c_shape: 2.0,
            c_scale: 0.5,
            beta_shape1: 1.0,
            beta_shape2: 1.0,
            theta_shape: 2.0,
            theta_scale: 10.0,
            lambda_shape1: 1.0,
            lambda_shape2: 1.0,
        }
    }
}

impl PriorSpec {
    fn fields_mut(&mut self) -> [(&'static str, &mut f64); 14] {
        [
            ("alpha_shape1", &mut self.alpha_shape1),
            ("alpha_shape2", &mut self.alpha_shape2),
            ("a_shape", &mut self.a_shape),
            ("a_scale", &mut self.a_scale),
            ("b_shape", &mut self.b_shape),
            ("b_scale", &mut self.b_scale),
            ("c_shape", &mut self.c_shape),
            ("c_scale", &mut self.c_scale),
            ("beta_shape1", &mut self.beta_shape1),
            ("beta_shape2", &mut self.beta_shape2),
            ("theta_shape", &mut self.theta_shape),
            ("theta_scale", &mut self.theta_scale),
            ("lambda_shape1", &mut self.lambda_shape1),
            ("lambda_shape2", &mut self.lambda_shape2),
        ]
    }

    /// Overrides one hyperparameter by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let mut found = false;
        for (name, slot) in self.fields_mut() {
            if name == key {
                *slot = value;
                found = true;
            }
        }
        if !found {
            return Err(GlkError::Usage(format!("unknown prior hyperparameter '{key}'")));
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let mut copy = *self;
        for (name, value) in copy.fields_mut() {
            if !(value.is_finite() && *value > 0.0) {
                return Err(GlkError::config(format!(
                    "prior hyperparameter {name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Beta(s1, s2) log density on `(0, 1)`.
pub fn log_beta_density(x: f64, s1: f64, s2: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    let norm = log_gamma(s1 + s2).unwrap() - log_gamma(s1).unwrap() - log_gamma(s2).unwrap();
    let mut lp = norm;
    if s1 != 1.0 {
        lp += (s1 - 1.0) * x.ln();
    }
    if s2 != 1.0 {
        lp += (s2 - 1.0) * (-x).ln_1p();
    }
    lp
}

/// Gamma log density with shape `k` and scale `s`.
pub fn log_gamma_density(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0 && x.is_finite()) {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * x.ln() - x / scale - log_gamma(shape).unwrap() - shape * scale.ln()
}

#[derive(Clone, Copy)]
enum Prior {
    Beta(f64, f64),
    Gamma(f64, f64),
}

impl Prior {
    fn log_density(self, x: f64) -> f64 {
        match self {
            Prior::Beta(s1, s2) => log_beta_density(x, s1, s2),
            Prior::Gamma(k, s) => log_gamma_density(x, k, s),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Prior::Beta(s1, s2) => (s1 - 1.0) / x - (s2 - 1.0) / (1.0 - x),
            Prior::Gamma(k, s) => (k - 1.0) / x - 1.0 / s,
        }
    }
}

fn priors(variant: Variant, p: &PriorSpec) -> Vec<Prior> {
    let alpha = Prior::Beta(p.alpha_shape1, p.alpha_shape2);
    let a = Prior::Gamma(p.a_shape, p.a_scale);
    let b = Prior::Gamma(p.b_shape, p.b_scale);
    let c = Prior::Gamma(p.c_shape, p.c_scale);
    let beta = Prior::Beta(p.beta_shape1, p.beta_shape2);
    match variant {
        Variant::Glk => vec![alpha, a, b, c, beta],
        Variant::Lk => vec![alpha, a, b, beta],
        Variant::Nb => vec![alpha, a, c, beta],
        Variant::Gp => vec![
            alpha,
            Prior::Gamma(p.theta_shape, p.theta_scale),
            Prior::Beta(p.lambda_shape1, p.lambda_shape2),
        ],
    }
}

/// Sum of the log prior densities of the free parameters; `-inf` off support.
pub fn log_prior(variant: Variant, params: &[f64], prior: &PriorSpec) -> f64 {
    priors(variant, prior)
        .into_iter()
        .zip(params)
        .map(|(pr, &x)| pr.log_density(x))
        .sum()
}

/// Gradient of [`log_prior`] with respect to the free parameters.
pub fn log_prior_gradient(variant: Variant, params: &[f64], prior: &PriorSpec) -> Vec<f64> {
    priors(variant, prior)
        .into_iter()
        .zip(params)
        .map(|(pr, &x)| pr.derivative(x))
        .collect()
}

/// Whether coordinate `k` of the variant lives on the unit interval.
fn is_unit(variant: Variant, k: usize) -> bool {
    k == 0 || k == variant.dim() - 1
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps free parameters to `η`.
pub fn reparametrize(variant: Variant, params: &[f64]) -> Vec<f64> {
    params
        .iter()
        .enumerate()
        .map(|(k, &x)| if is_unit(variant, k) { x.ln() - (-x).ln_1p() } else { x.ln() })
        .collect()
}

/// Maps `η` back to free parameters.
pub fn inverse_reparametrize(variant: Variant, eta: &[f64]) -> Vec<f64> {
    eta.iter()
        .enumerate()
        .map(|(k, &e)| if is_unit(variant, k) { logistic(e) } else { e.exp() })
        .collect()
}

/// `ln |dθ/dη|` at free parameters `params`.
pub fn log_jacobian(variant: Variant, params: &[f64]) -> f64 {
    params
        .iter()
        .enumerate()
        .map(|(k, &x)| if is_unit(variant, k) { x.ln() + (-x).ln_1p() } else { x.ln() })
        .sum()
}

/// Log-likelihood conditional on the first observation.
pub fn log_likelihood(model: &InarModel, data: &CountSeries) -> Result<f64> {
    if data.len() < 2 {
        return Err(GlkError::domain("likelihood needs at least two observations"));
    }
    let counts = TransitionCounts::from_series(data);
    Ok(TransitionKernel::new(model, counts.max_value()).log_likelihood(&counts))
}

/// A log density evaluation, with the log-likelihood part kept separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub log_density: f64,
    pub log_likelihood: f64,
}

impl Evaluation {
    pub const REJECTED: Evaluation =
        Evaluation { log_density: f64::NEG_INFINITY, log_likelihood: f64::NEG_INFINITY };
}

/// Unnormalized log density on `R^q` targeted by the sampler.
pub trait LogTarget {
    fn dim(&self) -> usize;
    fn evaluate(&self, eta: &[f64]) -> Evaluation;
}

/// Posterior of an INAR variant in `η` coordinates.
#[derive(Debug, Clone)]
pub struct PosteriorTarget {
    variant: Variant,
    prior: PriorSpec,
    counts: TransitionCounts,
}

impl PosteriorTarget {
    pub fn new(variant: Variant, data: &CountSeries, prior: PriorSpec) -> Result<Self> {
        if data.len() < 2 {
            return Err(GlkError::domain("posterior needs at least two observations"));
        }
        prior.validate()?;
        Ok(PosteriorTarget { variant, prior, counts: TransitionCounts::from_series(data) })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Log-likelihood at free parameters, `-inf` if they are inadmissible.
    pub fn log_likelihood_at(&self, params: &[f64]) -> f64 {
        match self.variant.model(params) {
            Ok(model) => {
                TransitionKernel::new(&model, self.counts.max_value()).log_likelihood(&self.counts)
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

impl LogTarget for PosteriorTarget {
    fn dim(&self) -> usize {
        self.variant.dim()
    }

    fn evaluate(&self, eta: &[f64]) -> Evaluation {
        if eta.iter().any(|e| !e.is_finite()) {
            return Evaluation::REJECTED;
        }
        let params = inverse_reparametrize(self.variant, eta);
        let lp = log_prior(self.variant, &params, &self.prior);
        if !lp.is_finite() {
            return Evaluation::REJECTED;
        }
        let ll = self.log_likelihood_at(&params);
        if !ll.is_finite() {
            return Evaluation::REJECTED;
        }
        Evaluation {
            log_density: lp + ll + log_jacobian(self.variant, &params),
            log_likelihood: ll,
        }
    }
}

/// `log π(η | x)` up to a constant; `-inf` where the parameters are inadmissible.
pub fn log_posterior_eta(
    variant: Variant,
    eta: &[f64],
    data: &CountSeries,
    prior: &PriorSpec,
) -> Result<f64> {
    Ok(PosteriorTarget::new(variant, data, *prior)?.evaluate(eta).log_density)
}

/// Adaptation constants of the Metropolis sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    /// `γ_j = (j + gamma_offset)^{-gamma_exponent}`.
    pub gamma_exponent: f64,
    pub gamma_offset: f64,
    /// Target acceptance probability `ρ*`.
    pub target_acceptance: f64,
    /// Initial proposal covariance; `initial_sigma_scale · I` when absent.
    pub initial_sigma: Option<DMatrix<f64>>,
    pub initial_sigma_scale: f64,
    /// Initial `ln λ`; `ln(2.38/√q)` when absent.
    pub initial_log_lambda: Option<f64>,
    /// Diagonal jitter added to `Σ` at proposal time.
    pub jitter: f64,
    /// Disables all adaptation (`γ ≡ 0`).
    pub frozen: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            gamma_exponent: 0.6,
            gamma_offset: 100.0,
            target_acceptance: 0.4,
            initial_sigma: None,
            initial_sigma_scale: 0.01,
            initial_log_lambda: None,
            jitter: 1e-10,
            frozen: false,
        }
    }
}

/// Mutable adaptation state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptState {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub log_lambda: f64,
    pub iteration: u64,
    pub accept_count: u64,
}

/// Result of one Metropolis step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Acceptance probability of the proposal.
    pub rho: f64,
}

/// Random-walk Metropolis with adaptive mean, covariance and global scale.
#[derive(Debug, Clone)]
pub struct AdaptiveMetropolis {
    config: AdaptConfig,
    state: AdaptState,
    current: DVector<f64>,
    current_eval: Evaluation,
}

impl AdaptiveMetropolis {
    pub fn new<T: LogTarget + ?Sized>(target: &T, initial: &[f64], config: AdaptConfig) -> Result<Self> {
        let q = target.dim();
        if initial.len() != q {
            return Err(GlkError::Initialization(format!(
                "initial point has {} coordinates, target has {q}",
                initial.len()
            )));
        }
        if !(config.gamma_exponent > 0.0 && config.gamma_offset >= 0.0 && config.jitter >= 0.0) {
            return Err(GlkError::config("invalid adaptation constants"));
        }
        let eval = target.evaluate(initial);
        if !eval.log_density.is_finite() {
            return Err(GlkError::Initialization(format!(
                "log posterior is not finite at the initial point {initial:?}"
            )));
        }
        let sigma = match &config.initial_sigma {
            Some(s) if s.nrows() == q && s.ncols() == q => s.clone(),
            Some(_) => return Err(GlkError::config("initial covariance has the wrong shape")),
            None => DMatrix::identity(q, q) * config.initial_sigma_scale,
        };
        let log_lambda = config
            .initial_log_lambda
            .unwrap_or_else(|| (2.38 / (q as f64).sqrt()).ln());
        let current = DVector::from_column_slice(initial);
        let state = AdaptState { mu: current.clone(), sigma, log_lambda, iteration: 0, accept_count: 0 };
        Ok(AdaptiveMetropolis { config, state, current, current_eval: eval })
    }

    /// Step size `γ_j`; zero when adaptation is frozen.
    pub fn gamma(&self, j: u64) -> f64 {
        if self.config.frozen {
            0.0
        } else {
            (j as f64 + self.config.gamma_offset).powf(-self.config.gamma_exponent)
        }
    }

    pub fn state(&self) -> &AdaptState {
        &self.state
    }

    pub fn current(&self) -> &[f64] {
        self.current.as_slice()
    }

    pub fn current_eval(&self) -> Evaluation {
        self.current_eval
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.state.iteration == 0 {
            0.0
        } else {
            self.state.accept_count as f64 / self.state.iteration as f64
        }
    }

    fn proposal_factor(&self) -> DMatrix<f64> {
        let q = self.current.len();
        let mut cov = self.state.sigma.clone() + DMatrix::identity(q, q) * self.config.jitter;
        loop {
            if let Some(chol) = cov.clone().cholesky() {
                return chol.l();
            }
            // repair a covariance that lost definiteness to rounding
            let bump = cov.diagonal().max().abs().max(1e-12) * 1e-8;
            cov += DMatrix::identity(q, q) * bump;
        }
    }

    pub fn step<T: LogTarget + ?Sized, R: Rng + ?Sized>(&mut self, target: &T, rng: &mut R) -> StepOutcome {
        let q = self.current.len();
        let l = self.proposal_factor();
        let z = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lambda = self.state.log_lambda.exp();
        let proposal = &self.current + (l * z) * lambda;
        let eval = target.evaluate(proposal.as_slice());
        let diff = eval.log_density - self.current_eval.log_density;
        let rho = if diff.is_nan() { 0.0 } else { diff.min(0.0).exp() };
        let u: f64 = rng.random();
        let accepted = u.ln() < diff;
        if accepted {
            self.current = proposal;
            self.current_eval = eval;
            self.state.accept_count += 1;
        }
        self.state.iteration += 1;
        let gamma = self.gamma(self.state.iteration);
        if gamma > 0.0 {
            let dev = &self.current - &self.state.mu;
            self.state.mu += &dev * gamma;
            let outer = &dev * dev.transpose();
            self.state.sigma += (outer - &self.state.sigma) * gamma;
            self.state.log_lambda += gamma * (rho - self.config.target_acceptance);
        }
        StepOutcome { accepted, rho }
    }
}

/// Run settings for [`amcmc_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Starting free parameters; method of moments when absent.
    pub initial: Option<Vec<f64>>,
    pub adapt: AdaptConfig,
}

impl McmcConfig {
    pub fn new(seed: u64) -> Self {
        McmcConfig {
            iterations: 50_000,
            burn_in: 10_000,
            thin: 10,
            seed,
            initial: None,
            adapt: AdaptConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(GlkError::config("iterations must be positive"));
        }
        if self.thin == 0 {
            return Err(GlkError::config("thinning factor must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(GlkError::config(format!(
                "burn-in {} leaves no draws out of {} iterations",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Run metadata stored with the draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub gamma_exponent: f64,
    pub gamma_offset: f64,
    pub initial: Vec<f64>,
}

/// Retained posterior draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub variant: Variant,
    /// Free parameters per retained draw.
    pub draws: Vec<Vec<f64>>,
    /// `η` per retained draw.
    pub eta: Vec<Vec<f64>>,
    pub log_posteriors: Vec<f64>,
    pub log_likelihoods: Vec<f64>,
    /// Every state of the chain, burn-in included, before thinning.
    pub trace: Vec<Vec<f64>>,
    pub meta: RunMeta,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        self.variant.param_names()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    pub fn trace_column(&self, k: usize) -> Vec<f64> {
        self.trace.iter().map(|d| d[k]).collect()
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let n = self.draws.len() as f64;
        (0..self.variant.dim())
            .map(|k| self.draws.iter().map(|d| d[k]).sum::<f64>() / n)
            .collect()
    }

    /// Writes `rows` as CSV with the parameter names as header.
    pub fn write_csv<W: Write>(&self, writer: W, rows: &[Vec<f64>]) -> Result<()> {
        write_chain_csv(writer, self.param_names(), rows)
    }
}

/// Writes a chain as CSV: one row per draw, one column per parameter.
pub fn write_chain_csv<W: Write>(writer: W, names: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| GlkError::Io(std::io::Error::other(e));
    w.write_record(names).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Method-of-moments starting values for a variant.
///
/// `α` comes from the lag-1 autocorrelation clamped to `[0.05, 0.95]`; the
/// innovation mean and dispersion follow from the stationary moments, and the
/// innovation is matched with `b = 0.1` (GLK, LK), `b = 0` (NB), `c = 1`.
pub fn initial_params(variant: Variant, data: &CountSeries) -> Vec<f64> {
    let xs: Vec<f64> = data.values().iter().map(|&v| v as f64).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let alpha = match acf(&xs, 1) {
        Ok(r) if r[1].is_finite() => r[1].clamp(0.05, 0.95),
        _ => 0.5,
    };
    let mu = (mean * (1.0 - alpha)).max(0.05);
    let sigma2 = var * (1.0 - alpha * alpha) - alpha * mu;
    let mut vmr = sigma2 / mu;
    if !(vmr > 1.05) {
        vmr = 1.5;
    }
    vmr = vmr.min(1e4);
    match variant {
        Variant::Nb => {
            let beta = 1.0 - 1.0 / vmr;
            vec![alpha, mu * (1.0 - beta) / beta, 1.0, beta]
        }
        Variant::Glk => {
            let b = 0.1;
            let beta = solve_vmr(vmr, 1.0 / (1.0 + b), |beta| {
                (1.0 - beta) / (1.0 - beta * (1.0 + b)).powi(2)
            });
            let kappa = 1.0 - beta * (1.0 + b);
            vec![alpha, mu * kappa / beta, b, 1.0, beta]
        }
        Variant::Lk => {
            let b = 0.1;
            let beta = solve_vmr(vmr, 1.0 - b, |beta| (1.0 - beta) / (1.0 - beta - b).powi(2));
            vec![alpha, mu * (1.0 - beta - b), b, beta]
        }
        Variant::Gp => {
            let lambda = 1.0 - 1.0 / vmr.sqrt();
            vec![alpha, mu * (1.0 - lambda), lambda]
        }
    }
}

/// Bisection for the `β` in `(0, upper)` at which the increasing map `f` hits `target`.
fn solve_vmr(target: f64, upper: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).clamp(1e-6, upper * (1.0 - 1e-9))
}

/// Runs the adaptive Metropolis sampler on the posterior of `variant`.
pub fn amcmc_run(
    data: &CountSeries,
    prior: &PriorSpec,
    variant: Variant,
    config: &McmcConfig,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let target = PosteriorTarget::new(variant, data, *prior)?;
    let initial = match &config.initial {
        Some(p) => p.clone(),
        None => initial_params(variant, data),
    };
    if let Err(e) = variant.model(&initial) {
        return Err(GlkError::Initialization(format!(
            "initial values {initial:?} are inadmissible: {e}"
        )));
    }
    let eta0 = reparametrize(variant, &initial);
    let mut sampler = AdaptiveMetropolis::new(&target, &eta0, config.adapt.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let kept = config.retained();
    let mut draws = PosteriorDraws {
        variant,
        draws: Vec::with_capacity(kept),
        eta: Vec::with_capacity(kept),
        log_posteriors: Vec::with_capacity(kept),
        log_likelihoods: Vec::with_capacity(kept),
        trace: Vec::with_capacity(config.iterations),
        meta: RunMeta {
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            seed: config.seed,
            acceptance_rate: 0.0,
            gamma_exponent: config.adapt.gamma_exponent,
            gamma_offset: config.adapt.gamma_offset,
            initial,
        },
    };
    for j in 1..=config.iterations {
        sampler.step(&target, &mut rng);
        let eta = sampler.current();
        let params = inverse_reparametrize(variant, eta);
        if j > config.burn_in && (j - config.burn_in) % config.thin == 0 {
            let eval = sampler.current_eval();
            draws.draws.push(params.clone());
            draws.eta.push(eta.to_vec());
            draws.log_posteriors.push(eval.log_density);
            draws.log_likelihoods.push(eval.log_likelihood);
        }
        draws.trace.push(params);
    }
    draws.meta.acceptance_rate = sampler.acceptance_rate();
    log::info!(
        "{variant} chain finished: {} draws kept, acceptance {:.3}",
        draws.len(),
        draws.meta.acceptance_rate
    );
    Ok(draws)
}

/// Minimum number of draws for [`credible_interval`].
pub const MIN_INTERVAL_DRAWS: usize = 100;

/// Empirical quantile with linear interpolation between order statistics:
/// `h = (n - 1) p`, value `x_(⌊h⌋) + (h - ⌊h⌋)(x_(⌊h⌋+1) - x_(⌊h⌋))`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed credible interval of one parameter's draws.
pub fn credible_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.len() < MIN_INTERVAL_DRAWS {
        return Err(GlkError::numerical(format!(
            "credible interval needs at least {MIN_INTERVAL_DRAWS} draws, got {}",
            values.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(GlkError::config(format!("credible level must lie in (0, 1), got {level}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}
