//! Chain diagnostics and model-comparison scores.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::bayes::{PosteriorDraws, PosteriorTarget, PriorSpec};
use crate::error::{GlkError, Result};
use crate::inar::CountSeries;
use crate::special_fns::log_sum_exp_nonempty;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn centered(chain: &[f64]) -> Result<(Vec<f64>, f64)> {
    if chain.iter().any(|v| !v.is_finite()) {
        return Err(GlkError::numerical("chain contains non-finite values"));
    }
    let m = mean(chain);
    let c: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / chain.len() as f64;
    if !(c0 > 0.0) {
        return Err(GlkError::numerical("autocorrelation undefined for a constant chain"));
    }
    Ok((c, c0))
}

fn autocorr_at(c: &[f64], c0: f64, lag: usize) -> f64 {
    let n = c.len();
    let s: f64 = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
    s / n as f64 / c0
}

/// Sample autocorrelations `ρ̂_0..=ρ̂_max_lag` with the biased (`1/N`) normalization.
pub fn acf(chain: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if chain.len() <= max_lag {
        return Err(GlkError::domain(format!(
            "lag {max_lag} requires more than {} draws",
            chain.len()
        )));
    }
    let (c, c0) = centered(chain)?;
    Ok((0..=max_lag).map(|k| if k == 0 { 1.0 } else { autocorr_at(&c, c0, k) }).collect())
}

/// Minimum chain length for the variance-based diagnostics.
pub const MIN_CHAIN_LENGTH: usize = 100;

fn check_length(chain: &[f64]) -> Result<()> {
    if chain.len() < MIN_CHAIN_LENGTH {
        return Err(GlkError::domain(format!(
            "diagnostics need at least {MIN_CHAIN_LENGTH} draws, got {}",
            chain.len()
        )));
    }
    Ok(())
}

/// Effective-sample-size ratio and inefficiency factor.
///
/// `ineff = 1 + 2 Σ ρ̂_k`, where the sum runs over consecutive pairs
/// `ρ̂_{2m} + ρ̂_{2m+1}` while they stay positive; `ess_ratio = 1/ineff`.
pub fn ess_and_ineff(chain: &[f64]) -> Result<(f64, f64)> {
    check_length(chain)?;
    let (c, c0) = centered(chain)?;
    let n = c.len();
    let mut ineff = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let r0 = if k == 0 { 1.0 } else { autocorr_at(&c, c0, k) };
        let pair = r0 + autocorr_at(&c, c0, k + 1);
        if pair <= 0.0 {
            break;
        }
        ineff += 2.0 * pair;
        k += 2;
    }
    Ok((1.0 / ineff, ineff))
}

fn batch_means_se(chain: &[f64]) -> f64 {
    let n = chain.len();
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let means: Vec<f64> = chain[n - batches * size..]
        .chunks(size)
        .map(mean)
        .collect();
    let m = mean(&means);
    let var = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Monte-Carlo standard error of the chain mean by batch means with
/// `⌊√N⌋` batches.
pub fn nse(chain: &[f64]) -> Result<f64> {
    check_length(chain)?;
    if chain.iter().any(|v| !v.is_finite()) {
        return Err(GlkError::numerical("chain contains non-finite values"));
    }
    Ok(batch_means_se(chain))
}

/// Geweke convergence diagnostic comparing the first and last windows of
/// the chain; returns `(z, two-sided p-value)`.
pub fn geweke(chain: &[f64], first_fraction: f64, last_fraction: f64) -> Result<(f64, f64)> {
    let valid = |f: f64| f > 0.0 && f < 1.0;
    if !valid(first_fraction) || !valid(last_fraction) || first_fraction + last_fraction > 1.0 {
        return Err(GlkError::config(format!(
            "Geweke windows {first_fraction} and {last_fraction} must be disjoint fractions"
        )));
    }
    check_length(chain)?;
    let n = chain.len();
    let n1 = (first_fraction * n as f64).floor() as usize;
    let n2 = (last_fraction * n as f64).floor() as usize;
    if n1 < 4 || n2 < 4 {
        return Err(GlkError::config("Geweke windows are too short"));
    }
    let (a, b) = (&chain[..n1], &chain[n - n2..]);
    let se = (batch_means_se(a).powi(2) + batch_means_se(b).powi(2)).sqrt();
    let z = (mean(a) - mean(b)) / se;
    if !z.is_finite() {
        return Err(GlkError::numerical("Geweke statistic undefined for a constant chain"));
    }
    let normal = Normal::standard();
    Ok((z, 2.0 * (1.0 - normal.cdf(z.abs()))))
}

/// Diagnostics of one parameter's chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub acf: BTreeMap<usize, f64>,
    pub ess_ratio: f64,
    pub ineff: f64,
    pub nse: f64,
    pub geweke_z: f64,
    pub geweke_p: f64,
}

/// Diagnostics of every parameter of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub draws: usize,
    pub acceptance_rate: Option<f64>,
    pub parameters: Vec<ParameterDiagnostics>,
}

/// Default Geweke window fractions.
pub const GEWEKE_FIRST: f64 = 0.1;
pub const GEWEKE_LAST: f64 = 0.5;

/// Diagnoses each column of a chain stored row-wise.
pub fn chain_diagnostics(
    names: &[&str],
    rows: &[Vec<f64>],
    lags: &[usize],
    acceptance_rate: Option<f64>,
) -> Result<ChainDiagnostics> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let mut parameters = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let r = acf(&column, max_lag)?;
        let (ess_ratio, ineff) = ess_and_ineff(&column)?;
        let (geweke_z, geweke_p) = geweke(&column, GEWEKE_FIRST, GEWEKE_LAST)?;
        parameters.push(ParameterDiagnostics {
            name: name.to_string(),
            acf: lags.iter().map(|&l| (l, r[l])).collect(),
            ess_ratio,
            ineff,
            nse: nse(&column)?,
            geweke_z,
            geweke_p,
        });
    }
    Ok(ChainDiagnostics { draws: rows.len(), acceptance_rate, parameters })
}

/// Deviance information criterion and its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicEstimate {
    pub dic: f64,
    pub mean_log_likelihood: f64,
    pub log_likelihood_at_estimate: f64,
    /// Parameters at which the plug-in likelihood was evaluated.
    pub estimate: Vec<f64>,
    /// Set when the posterior mean was inadmissible and the
    /// highest-posterior draw was used instead.
    pub estimate_fallback: bool,
}

/// `DIC = -(4/N) Σ log p(X|θ_j) + 2 log p(X|θ̂)` with `θ̂` the posterior mean.
pub fn dic(draws: &PosteriorDraws, data: &CountSeries) -> Result<DicEstimate> {
    if draws.is_empty() {
        return Err(GlkError::domain("DIC needs at least one draw"));
    }
    let target = PosteriorTarget::new(draws.variant, data, PriorSpec::default())?;
    let mean_ll = mean(&draws.log_likelihoods);
    let mut estimate = draws.posterior_mean();
    let mut ll_hat = target.log_likelihood_at(&estimate);
    let mut fallback = false;
    if !ll_hat.is_finite() {
        let best = draws
            .log_posteriors
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        estimate = draws.draws[best].clone();
        ll_hat = target.log_likelihood_at(&estimate);
        fallback = true;
        log::warn!("posterior mean inadmissible, DIC evaluated at the highest-posterior draw");
    }
    Ok(DicEstimate {
        dic: -4.0 * mean_ll + 2.0 * ll_hat,
        mean_log_likelihood: mean_ll,
        log_likelihood_at_estimate: ll_hat,
        estimate,
        estimate_fallback: fallback,
    })
}

/// Mass of the normal weighting density kept by the Gelfand–Dey truncation.
pub const GD_COVERAGE: f64 = 0.95;
/// Weight effective sample size below which the estimate is flagged.
pub const GD_MIN_WEIGHT_ESS: f64 = 50.0;

/// Log marginal likelihood estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalLikelihood {
    pub gelfand_dey: f64,
    pub harmonic_mean: f64,
    pub weight_ess: f64,
    pub flagged: bool,
}

/// Gelfand–Dey estimate of `ln p(x)` from draws `eta` of a posterior whose
/// unnormalized log density at each draw is `log_joint`.
///
/// The weighting density is the normal fitted to the draws, truncated to its
/// 95% ellipsoid. Returns the estimate and the effective sample size of the
/// importance weights.
pub fn gelfand_dey(eta: &[Vec<f64>], log_joint: &[f64]) -> Result<(f64, f64)> {
    let n = eta.len();
    if n < 2 || n != log_joint.len() {
        return Err(GlkError::domain("Gelfand-Dey needs matching draws and densities"));
    }
    let q = eta[0].len();
    let rows = DMatrix::from_fn(n, q, |i, j| eta[i][j]);
    let m: DVector<f64> = DVector::from_fn(q, |j, _| rows.column(j).mean());
    let mut cov = DMatrix::zeros(q, q);
    for i in 0..n {
        let d = rows.row(i).transpose() - &m;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;
    let chol = cov
        .cholesky()
        .ok_or_else(|| GlkError::numerical("draw covariance is singular"))?;
    let l = chol.l();
    let log_det_half: f64 = l.diagonal().iter().map(|v| v.ln()).sum();
    let radius = ChiSquared::new(q as f64)
        .map_err(|e| GlkError::numerical(e.to_string()))?
        .inverse_cdf(GD_COVERAGE);
    let norm = -0.5 * q as f64 * (2.0 * std::f64::consts::PI).ln() - log_det_half - GD_COVERAGE.ln();
    let mut log_w = Vec::with_capacity(n);
    for (i, lj) in log_joint.iter().enumerate() {
        let d = rows.row(i).transpose() - &m;
        let z = l
            .solve_lower_triangular(&d)
            .ok_or_else(|| GlkError::numerical("triangular solve failed"))?;
        let d2 = z.norm_squared();
        if d2 <= radius {
            log_w.push(norm - 0.5 * d2 - lj);
        }
    }
    if log_w.is_empty() {
        return Err(GlkError::numerical("no draws inside the Gelfand-Dey ellipsoid"));
    }
    let lse = log_sum_exp_nonempty(&log_w);
    let doubled: Vec<f64> = log_w.iter().map(|w| 2.0 * w).collect();
    let ess = (2.0 * lse - log_sum_exp_nonempty(&doubled)).exp();
    Ok(((n as f64).ln() - lse, ess))
}

/// Harmonic-mean estimate of `ln p(x)` from per-draw log-likelihoods.
pub fn harmonic_mean(log_likelihoods: &[f64]) -> f64 {
    let neg: Vec<f64> = log_likelihoods.iter().map(|l| -l).collect();
    (log_likelihoods.len() as f64).ln() - log_sum_exp_nonempty(&neg)
}

/// Minimum retained draws for the marginal likelihood.
pub const MIN_MARGINAL_DRAWS: usize = 500;

/// Gelfand–Dey and harmonic-mean marginal likelihoods of a fit.
pub fn log_marginal_likelihood(draws: &PosteriorDraws) -> Result<MarginalLikelihood> {
    if draws.len() < MIN_MARGINAL_DRAWS {
        return Err(GlkError::domain(format!(
            "marginal likelihood needs at least {MIN_MARGINAL_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    let (gd, ess) = gelfand_dey(&draws.eta, &draws.log_posteriors)?;
    let flagged = ess < GD_MIN_WEIGHT_ESS;
    if flagged {
        log::warn!("Gelfand-Dey weights are unstable (effective size {ess:.1})");
    }
    Ok(MarginalLikelihood {
        gelfand_dey: gd,
        harmonic_mean: harmonic_mean(&draws.log_likelihoods),
        weight_ess: ess,
        flagged,
    })
}

/// Model-comparison scores of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub dic: f64,
    pub log_marginal_likelihood: f64,
    pub harmonic_mean_log_marginal_likelihood: f64,
    pub marginal_weight_ess: f64,
    pub marginal_flagged: bool,
    pub mean_log_likelihood: f64,
    pub log_likelihood_at_estimate: f64,
    pub estimate_fallback: bool,
}

pub fn model_score(draws: &PosteriorDraws, data: &CountSeries) -> Result<ModelScore> {
    let d = dic(draws, data)?;
    let ml = log_marginal_likelihood(draws)?;
    Ok(ModelScore {
        dic: d.dic,
        log_marginal_likelihood: ml.gelfand_dey,
        harmonic_mean_log_marginal_likelihood: ml.harmonic_mean,
        marginal_weight_ess: ml.weight_ess,
        marginal_flagged: ml.flagged,
        mean_log_likelihood: d.mean_log_likelihood,
        log_likelihood_at_estimate: d.log_likelihood_at_estimate,
        estimate_fallback: d.estimate_fallback,
    })
}
