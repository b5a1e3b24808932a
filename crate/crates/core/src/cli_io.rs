//! Data ingestion, reports and the command-line surface.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bayes::{
    amcmc_run, credible_interval, quantile_sorted, McmcConfig, PosteriorDraws, PriorSpec,
};
use crate::diagnostics::{chain_diagnostics, model_score, ChainDiagnostics, ModelScore};
use crate::error::{GlkError, Result};
use crate::glk_dist::{CountDistribution, GlkParams, GpParams};
use crate::inar::{simulate, stationary_moments, CountSeries, Innovation, InarModel, Start, Variant};

/// Version of the fit report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Column names used when reading a count series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub value: String,
    pub date: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec { value: "value".into(), date: "date".into() }
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> GlkError {
    GlkError::Parse { line, message: message.into() }
}

/// Parses a count series from CSV text with a mandatory header.
///
/// The value column is required; a date column, when present, supplies
/// labels that must be strictly increasing. Line numbers in errors count the
/// header as line 1.
pub fn parse_count_series(text: &str, columns: &ColumnSpec) -> Result<CountSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(GlkError::domain("input is empty"));
    }
    let value_idx = headers
        .iter()
        .position(|h| h == columns.value)
        .ok_or_else(|| parse_error(1, format!("missing '{}' column", columns.value)))?;
    let date_idx = headers.iter().position(|h| h == columns.date);
    let mut values = Vec::new();
    let mut dates: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != headers.len() {
            return Err(parse_error(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let cell = &record[value_idx];
        if cell.is_empty() {
            return Err(parse_error(line, "missing value"));
        }
        let v: u64 = cell.parse().map_err(|_| {
            parse_error(line, format!("'{cell}' is not a nonnegative integer"))
        })?;
        values.push(v);
        if let Some(d) = date_idx {
            let label = &record[d];
            if label.is_empty() {
                return Err(parse_error(line, "missing date"));
            }
            if let Some(prev) = dates.last() {
                if label <= prev.as_str() {
                    return Err(parse_error(
                        line,
                        format!("date '{label}' does not follow '{prev}'"),
                    ));
                }
            }
            dates.push(label.to_string());
        }
    }
    if values.is_empty() {
        return Err(GlkError::domain("input has no observations"));
    }
    match date_idx {
        Some(_) => CountSeries::with_timestamps(values, dates),
        None => CountSeries::new(values),
    }
}

/// Reads a count series from a CSV file.
pub fn read_count_series(path: &Path, columns: &ColumnSpec) -> Result<CountSeries> {
    let text = fs::read_to_string(path)?;
    parse_count_series(&text, columns)
}

/// Hex SHA-256 of a byte string.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes a series as CSV, with a date column when it has labels.
pub fn write_count_series<W: Write>(mut w: W, series: &CountSeries) -> Result<()> {
    match series.timestamps() {
        Some(dates) => {
            writeln!(w, "date,value")?;
            for (d, v) in dates.iter().zip(series.values()) {
                writeln!(w, "{d},{v}")?;
            }
        }
        None => {
            writeln!(w, "value")?;
            for v in series.values() {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Posterior summary of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    /// Posterior mean.
    pub estimate: f64,
    pub median: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Summary {
    pub fn from_draws(name: &str, values: &[f64], level: f64) -> Result<Self> {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let (ci_low, ci_high) = credible_interval(values, level)?;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = quantile_sorted(&sorted, 0.5);
        if !(ci_low <= mean && mean <= ci_high) {
            log::warn!("posterior mean of {name} lies outside its {level} interval");
        }
        Ok(Summary { name: name.to_string(), estimate: mean, median, sd, ci_low, ci_high })
    }
}

/// Diagnostics of the full chain and of the retained draws after burn-in
/// removal and thinning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticBlocks {
    pub before_thinning: ChainDiagnostics,
    pub after_thinning: Option<ChainDiagnostics>,
}

/// Run metadata of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitMeta {
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub retained: usize,
    pub acceptance_rate: f64,
    pub gamma_exponent: f64,
    pub gamma_offset: f64,
    pub initial_values: Vec<f64>,
    pub observations: usize,
    pub data_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Everything `fit` reports about one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub model: Variant,
    pub prior: PriorSpec,
    pub parameters: Vec<Summary>,
    /// Stationary mean, dispersion index and coefficient of variation of the process.
    pub derived: Vec<Summary>,
    pub diagnostics: DiagnosticBlocks,
    pub score: ModelScore,
    pub meta: FitMeta,
}

/// Lags reported in the autocorrelation blocks by default.
pub const DEFAULT_LAGS: [usize; 3] = [1, 5, 10];

/// Assembles the report of a finished run.
pub fn build_fit_report(
    draws: &PosteriorDraws,
    data: &CountSeries,
    prior: &PriorSpec,
    data_digest: String,
    lags: &[usize],
    wall_clock_seconds: Option<f64>,
) -> Result<FitReport> {
    let names = draws.param_names();
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, name)| Summary::from_draws(name, &draws.column(k), 0.95))
        .collect::<Result<Vec<_>>>()?;
    let mut mean_x = Vec::with_capacity(draws.len());
    let mut vmr_x = Vec::with_capacity(draws.len());
    let mut cv_x = Vec::with_capacity(draws.len());
    for d in &draws.draws {
        let st = stationary_moments(&draws.variant.model(d)?, 2)?;
        mean_x.push(st.mean);
        vmr_x.push(st.vmr);
        cv_x.push(st.variance.sqrt() / st.mean);
    }
    let derived = vec![
        Summary::from_draws("unconditional_mean", &mean_x, 0.95)?,
        Summary::from_draws("vmr", &vmr_x, 0.95)?,
        Summary::from_draws("cv", &cv_x, 0.95)?,
    ];
    let rate = Some(draws.meta.acceptance_rate);
    let before = chain_diagnostics(names, &draws.trace, lags, rate)?;
    let after = if draws.meta.thin > 1 || draws.meta.burn_in > 0 {
        Some(chain_diagnostics(names, &draws.draws, lags, rate)?)
    } else {
        None
    };
    Ok(FitReport {
        schema_version: SCHEMA_VERSION,
        model: draws.variant,
        prior: *prior,
        parameters,
        derived,
        diagnostics: DiagnosticBlocks { before_thinning: before, after_thinning: after },
        score: model_score(draws, data)?,
        meta: FitMeta {
            seed: draws.meta.seed,
            iterations: draws.meta.iterations,
            burn_in: draws.meta.burn_in,
            thinning: draws.meta.thin,
            retained: draws.len(),
            acceptance_rate: draws.meta.acceptance_rate,
            gamma_exponent: draws.meta.gamma_exponent,
            gamma_offset: draws.meta.gamma_offset,
            initial_values: draws.meta.initial.clone(),
            observations: data.len(),
            data_digest,
            wall_clock_seconds,
        },
    })
}

#[derive(Debug, Parser)]
#[command(name = "glk-inar", version, about = "GLK-INAR(1) count time series: simulation, moments and Bayesian fitting")]
pub struct Cli {
    /// Reproducible mode: seeds are mandatory and wall-clock times are omitted.
    #[arg(long, global = true)]
    pub ci: bool,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path and write it as a `value` CSV.
    Simulate(SimulateArgs),
    /// Fit one model by adaptive MCMC and write a JSON report.
    Fit(FitArgs),
    /// Fit several models and tabulate DIC and marginal likelihood.
    Compare(CompareArgs),
    /// Print innovation and process moments.
    Moments(MomentsArgs),
    /// Diagnose an exported chain.
    Diagnose(DiagnoseArgs),
}

/// Model parameters given on the command line.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "glk")]
    pub variant: Variant,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// GP innovation `θ`.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// GP innovation `λ`.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

fn required(value: Option<f64>, flag: &str, variant: Variant) -> Result<f64> {
    value.ok_or_else(|| GlkError::Usage(format!("--{flag} is required for the {variant} variant")))
}

impl ModelArgs {
    pub fn innovation(&self) -> Result<Innovation> {
        let v = self.variant;
        let p = match v {
            Variant::Glk => Innovation::Glk(GlkParams::new(
                required(self.a, "a", v)?,
                required(self.b, "b", v)?,
                required(self.c, "c", v)?,
                required(self.beta, "beta", v)?,
            )?),
            Variant::Lk => {
                let beta = required(self.beta, "beta", v)?;
                if let Some(c) = self.c {
                    if c != beta {
                        return Err(GlkError::domain("the lk variant ties c to beta"));
                    }
                }
                Innovation::Glk(GlkParams::new(required(self.a, "a", v)?, required(self.b, "b", v)?, beta, beta)?)
            }
            Variant::Nb => {
                if self.b.is_some_and(|b| b != 0.0) {
                    return Err(GlkError::domain("the nb variant fixes b = 0"));
                }
                Innovation::Glk(GlkParams::new(
                    required(self.a, "a", v)?,
                    0.0,
                    self.c.unwrap_or(1.0),
                    required(self.beta, "beta", v)?,
                )?)
            }
            Variant::Gp => Innovation::Gp(GpParams::new(
                required(self.theta, "theta", v)?,
                required(self.lambda, "lambda", v)?,
            )?),
        };
        Ok(p)
    }

    pub fn model(&self) -> Result<InarModel> {
        let alpha = required(self.alpha, "alpha", self.variant)?;
        InarModel::new(alpha, self.innovation()?, self.variant)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Steps discarded before recording.
    #[arg(long, default_value_t = crate::inar::DEFAULT_WARMUP)]
    pub warmup: usize,
}

#[derive(Debug, Clone, Args)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 50_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Prior override as `name=value`, e.g. `b_scale=1.0` (repeatable).
    #[arg(long = "prior", value_name = "NAME=VALUE")]
    pub priors: Vec<String>,
    /// Exponent `δ` of the adaptation step `(j + offset)^-δ`.
    #[arg(long, default_value_t = 0.6)]
    pub gamma_exponent: f64,
    /// Offset added to the iteration counter in the adaptation step.
    #[arg(long, default_value_t = 100.0)]
    pub gamma_offset: f64,
    /// Autocorrelation lags reported in the diagnostics.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAGS)]
    pub lags: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: Variant,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full chain, burn-in included, as CSV.
    #[arg(long)]
    pub chain_out: Option<PathBuf>,
    /// Also write the retained draws as CSV.
    #[arg(long)]
    pub draws_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated model list, e.g. `glk,nb`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<Variant>,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// JSON output path; the aligned table always goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Autocovariance lags.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
    pub lags: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Chain CSV with one column per parameter.
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAGS)]
    pub lags: Vec<usize>,
    /// Thinning factor for the after-thinning block.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Leading rows dropped before thinning.
    #[arg(long, default_value_t = 0)]
    pub burnin: usize,
}

fn resolve_seed(seed: Option<u64>, ci: bool) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None if ci => Err(GlkError::Usage("--seed is required with --ci".into())),
        None => {
            let s = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            log::warn!("no --seed given, using {s}");
            Ok(s)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| GlkError::Io(io::Error::other(e)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>> {
    Ok(io::BufWriter::new(fs::File::create(path)?))
}

#[derive(Serialize)]
struct InnovationMoments {
    mean: f64,
    variance: f64,
    vmr: f64,
    cv: f64,
    skewness: f64,
    kurtosis: f64,
}

fn innovation_moments(innov: &Innovation) -> InnovationMoments {
    let [k1, k2, k3, k4] = innov.cumulants();
    InnovationMoments {
        mean: k1,
        variance: k2,
        vmr: k2 / k1,
        cv: k2.sqrt() / k1,
        skewness: k3 / k2.powf(1.5),
        kurtosis: (k4 + 3.0 * k2 * k2) / (k2 * k2),
    }
}

#[derive(Serialize)]
struct ProcessMoments {
    mean: f64,
    variance: f64,
    vmr: f64,
    autocovariance: Vec<(usize, f64)>,
}

fn process_moments(model: &InarModel, lags: &[usize]) -> Result<ProcessMoments> {
    let st = stationary_moments(model, 2)?;
    Ok(ProcessMoments {
        mean: st.mean,
        variance: st.variance,
        vmr: st.vmr,
        autocovariance: lags.iter().map(|&l| (l, st.autocovariance(l as u32))).collect(),
    })
}

#[derive(Serialize)]
struct MomentsOutput {
    variant: Variant,
    innovation: InnovationMoments,
    #[serde(skip_serializing_if = "Option::is_none")]
    process: Option<ProcessMoments>,
}

pub fn cmd_simulate(args: &SimulateArgs, ci: bool) -> Result<()> {
    if args.length == 0 {
        return Err(GlkError::Usage("--length must be positive".into()));
    }
    let model = args.model.model()?;
    let seed = resolve_seed(args.seed, ci)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let path = simulate(&model, args.length, Start::Stationary { warmup: args.warmup }, &mut rng)?;
    write_count_series(create(&args.out)?, &path)?;
    let out = MomentsOutput {
        variant: model.variant(),
        innovation: innovation_moments(model.innovation()),
        process: Some(process_moments(&model, &[0, 1])?),
    };
    println!("{}", to_json(&out)?);
    Ok(())
}

pub fn cmd_moments(args: &MomentsArgs) -> Result<()> {
    let innovation = args.model.innovation()?;
    let process = match args.model.alpha {
        Some(_) => Some(process_moments(&args.model.model()?, &args.lags)?),
        None => None,
    };
    let out = MomentsOutput {
        variant: args.model.variant,
        innovation: innovation_moments(&innovation),
        process,
    };
    println!("{}", to_json(&out)?);
    Ok(())
}

fn prior_from(overrides: &[String]) -> Result<PriorSpec> {
    let mut prior = PriorSpec::default();
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| GlkError::Usage(format!("prior override '{item}' is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| GlkError::Usage(format!("prior override '{item}' has a non-numeric value")))?;
        prior.set(key.trim(), value)?;
    }
    Ok(prior)
}

fn mcmc_config(args: &McmcArgs, seed: u64) -> McmcConfig {
    let mut config = McmcConfig::new(seed);
    config.iterations = args.iterations;
    config.burn_in = args.burnin;
    config.thin = args.thin;
    config.adapt.gamma_exponent = args.gamma_exponent;
    config.adapt.gamma_offset = args.gamma_offset;
    config
}

fn load_input(path: &Path) -> Result<(CountSeries, String)> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| GlkError::Parse { line: 0, message: "input is not UTF-8".into() })?;
    Ok((parse_count_series(&text, &ColumnSpec::default())?, digest_hex(&bytes)))
}

/// Fits one model; shared by `fit` and `compare`.
pub fn run_fit(
    data: &CountSeries,
    digest: &str,
    variant: Variant,
    args: &McmcArgs,
    seed: u64,
    ci: bool,
) -> Result<(FitReport, PosteriorDraws)> {
    let prior = prior_from(&args.priors)?;
    let config = mcmc_config(args, seed);
    let started = Instant::now();
    let draws = amcmc_run(data, &prior, variant, &config)?;
    let elapsed = (!ci).then(|| started.elapsed().as_secs_f64());
    let report = build_fit_report(&draws, data, &prior, digest.to_string(), &args.lags, elapsed)?;
    Ok((report, draws))
}

pub fn cmd_fit(args: &FitArgs, ci: bool) -> Result<()> {
    let seed = resolve_seed(args.mcmc.seed, ci)?;
    let (data, digest) = load_input(&args.input)?;
    let (report, draws) = run_fit(&data, &digest, args.model, &args.mcmc, seed, ci)?;
    write_text(&args.out, &(to_json(&report)? + "\n"))?;
    if let Some(path) = &args.chain_out {
        draws.write_csv(create(path)?, &draws.trace)?;
    }
    if let Some(path) = &args.draws_out {
        draws.write_csv(create(path)?, &draws.draws)?;
    }
    Ok(())
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: Variant,
    pub seed: u64,
    pub dic: f64,
    pub log_marginal_likelihood: f64,
    pub best_dic: bool,
    pub best_marginal_likelihood: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub data_digest: String,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Marks the lowest DIC and highest marginal likelihood.
pub fn star_best(rows: &mut [ComparisonRow]) {
    let best_dic = rows.iter().map(|r| r.dic).fold(f64::INFINITY, f64::min);
    let best_ml = rows.iter().map(|r| r.log_marginal_likelihood).fold(f64::NEG_INFINITY, f64::max);
    for r in rows {
        r.best_dic = r.dic == best_dic;
        r.best_marginal_likelihood = r.log_marginal_likelihood == best_ml;
    }
}

/// Renders the comparison as an aligned text table.
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{:<6} {:>14} {:>18}\n", "model", "DIC", "log ML");
    for r in rows {
        let star = |b: bool| if b { "*" } else { " " };
        out += &format!(
            "{:<6} {:>13.4}{} {:>17.4}{}\n",
            r.model.as_str(),
            r.dic,
            star(r.best_dic),
            r.log_marginal_likelihood,
            star(r.best_marginal_likelihood)
        );
    }
    out
}

pub fn cmd_compare(args: &CompareArgs, ci: bool) -> Result<()> {
    let unique: BTreeSet<_> = args.models.iter().collect();
    if unique.len() != args.models.len() {
        return Err(GlkError::Usage("duplicate model in --models".into()));
    }
    let seed = resolve_seed(args.mcmc.seed, ci)?;
    let (data, digest) = load_input(&args.input)?;
    let mut comparison = Comparison { schema_version: SCHEMA_VERSION, data_digest: digest.clone(), rows: Vec::new(), error: None };
    let mut failure = None;
    for (k, &variant) in args.models.iter().enumerate() {
        let model_seed = seed.wrapping_add(k as u64);
        match run_fit(&data, &digest, variant, &args.mcmc, model_seed, ci) {
            Ok((report, _)) => comparison.rows.push(ComparisonRow {
                model: variant,
                seed: model_seed,
                dic: report.score.dic,
                log_marginal_likelihood: report.score.log_marginal_likelihood,
                best_dic: false,
                best_marginal_likelihood: false,
            }),
            Err(e) => {
                comparison.error = Some(format!("{variant}: {e}"));
                failure = Some(e);
                break;
            }
        }
    }
    star_best(&mut comparison.rows);
    if let Some(path) = &args.out {
        write_text(path, &(to_json(&comparison)? + "\n"))?;
    }
    match failure {
        Some(e) => {
            eprintln!("{}", to_json(&comparison)?);
            Err(e)
        }
        None => {
            print!("{}", comparison_table(&comparison.rows));
            Ok(())
        }
    }
}

/// Reads a chain CSV: header of parameter names, one numeric row per draw.
pub fn parse_chain(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        return Err(parse_error(1, "chain has no header"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            parse_error(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(line, format!("'{f}' is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let (names, rows) = parse_chain(&fs::read_to_string(&args.chain)?)?;
    if let Some(&lag) = args.lags.iter().max() {
        if lag >= rows.len() {
            return Err(GlkError::domain(format!(
                "lag {lag} is not below the chain length {}",
                rows.len()
            )));
        }
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let before = chain_diagnostics(&refs, &rows, &args.lags, None)?;
    let after = match args.thin {
        Some(0) => return Err(GlkError::Usage("--thin must be positive".into())),
        Some(t) => {
            if args.burnin >= rows.len() {
                return Err(GlkError::Usage("--burnin must be below the chain length".into()));
            }
            let thinned: Vec<Vec<f64>> =
                rows.iter().skip(args.burnin + t - 1).step_by(t).cloned().collect();
            Some(chain_diagnostics(&refs, &thinned, &args.lags, None)?)
        }
        None => None,
    };
    let blocks = DiagnosticBlocks { before_thinning: before, after_thinning: after };
    println!("{}", to_json(&blocks)?);
    Ok(())
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, cli.ci),
        Command::Fit(a) => cmd_fit(a, cli.ci),
        Command::Compare(a) => cmd_compare(a, cli.ci),
        Command::Moments(a) => cmd_moments(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

/// Machine-readable error document written to standard error.
pub fn error_json(err: &GlkError) -> String {
    let mut detail = serde_json::Map::new();
    detail.insert("kind".into(), err.kind().into());
    detail.insert("message".into(), err.to_string().into());
    if let GlkError::Parse { line, .. } = err {
        detail.insert("line".into(), (*line).into());
    }
    detail.insert("exit_code".into(), err.exit_code().into());
    serde_json::json!({ "error": detail }).to_string()
}
