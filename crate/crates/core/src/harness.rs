//! Reproducible Monte Carlo experiments: risk curves over a grid of sample
//! sizes, the hard-instance pair, and fingerprint correlation decay.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientVector, Regime};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate, exact_bias, params_for_regime, select_params, CoefficientCache, ParamOverrides,
};
use crate::fingerprint::fingerprint_of;
use crate::rng::RngStream;
use crate::sampling::{draw, draw_poissonized, ModelTag};
use crate::urn::{make_hard_pair, make_uniform_support, parse_urn, UrnSpec};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Minimum trial count for a correlation estimate.
pub const MIN_CORRELATION_TRIALS: u64 = 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UrnSource {
    File(PathBuf),
    Uniform {
        k: u64,
        #[serde(rename = "C")]
        c: u64,
    },
    HardPair {
        k: u64,
        delta: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Naive,
    L2,
    Interpolation,
    Auto,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Naive => "naive",
            EstimatorKind::L2 => "l2",
            EstimatorKind::Interpolation => "interpolation",
            EstimatorKind::Auto => "auto",
        }
    }

    /// Coefficients for an urn of size `k` sampled at nominal size `n`.
    pub fn coefficients(
        self,
        k: u64,
        n: u64,
        cache: &CoefficientCache,
    ) -> Result<std::sync::Arc<CoefficientVector>> {
        let overrides = ParamOverrides::default();
        let params = match self {
            EstimatorKind::Naive => return Ok(std::sync::Arc::new(CoefficientVector::naive(k, n))),
            EstimatorKind::L2 => params_for_regime(k, n, Regime::L2, &overrides)?,
            EstimatorKind::Interpolation => {
                params_for_regime(k, n, Regime::Interpolation, &overrides)?
            }
            EstimatorKind::Auto => select_params(k, n, &overrides)?,
        };
        cache.get_or_build(&params)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(EstimatorKind::Naive),
            "l2" => Ok(EstimatorKind::L2),
            "interpolation" => Ok(EstimatorKind::Interpolation),
            "auto" => Ok(EstimatorKind::Auto),
            other => Err(Error::invalid(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_outputs() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub urn: UrnSource,
    pub model: ModelTag,
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputFormat>,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config. Relative urn file paths are kept
    /// as written; see [`ExperimentConfig::load`].
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(&field_of_json_error(&e), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative urn file path resolves against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let UrnSource::File(file) = &mut cfg.urn {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must not be empty"));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::config("n_grid", "sample sizes must be at least 1"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_grid", "must be strictly increasing"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("estimators", "must not be empty"));
        }
        if self.outputs.is_empty() {
            return Err(Error::config("outputs", "must not be empty"));
        }
        match self.urn {
            UrnSource::Uniform { k, c } if c == 0 || c > k => {
                return Err(Error::config("urn.uniform", format!("need 1 <= C <= k, got k={k}, C={c}")));
            }
            UrnSource::Uniform { k, .. } | UrnSource::HardPair { k, .. } if k < 2 => {
                return Err(Error::config("urn", format!("need k >= 2, got k={k}")));
            }
            UrnSource::HardPair { k, delta } if delta == 0 || k < 4 || delta > k / 2 - 1 => {
                return Err(Error::config(
                    "urn.hard_pair",
                    format!("need 1 <= delta <= k/2 - 1, got delta={delta}, k={k}"),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Builds the urn for `file` and `uniform` sources.
    pub fn resolve_urn(&self) -> Result<UrnSpec> {
        let urn = match &self.urn {
            UrnSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_urn(&text)?
            }
            UrnSource::Uniform { k, c } => make_uniform_support(*k, *c)?,
            UrnSource::HardPair { .. } => {
                return Err(Error::config(
                    "urn",
                    "hard_pair sources run through hard_pair_experiment",
                ))
            }
        };
        self.check_sizes(urn.k())?;
        Ok(urn)
    }

    fn check_sizes(&self, k: u64) -> Result<()> {
        if k < 2 {
            return Err(Error::config("urn", "need k >= 2 balls"));
        }
        let fixed = matches!(
            self.model,
            ModelTag::Hypergeometric | ModelTag::SimulatedWithReplacement | ModelTag::Bernoulli
        );
        let last = *self.n_grid.last().expect("validated nonempty");
        if fixed && last > k {
            return Err(Error::config(
                "n_grid",
                format!("model {} needs n <= k = {k}, got {last}", self.model),
            ));
        }
        Ok(())
    }
}

fn field_of_json_error(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(field) = rest.split('`').next() {
                return field.to_string();
            }
        }
    }
    "<root>".to_string()
}

/// Aggregate over all trials for one `(n, estimator)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: u64,
    pub estimator: EstimatorKind,
    pub trials: u64,
    /// True number of colors.
    pub c_true: u64,
    pub mean_c_hat: f64,
    pub rmse: f64,
    pub normalized_rmse: f64,
    pub bias_empirical: f64,
    /// Poisson-model bias of the unclamped estimate.
    pub bias_exact: Option<f64>,
    pub mean_c_tilde: f64,
    pub bias_unclamped: f64,
    /// Sample standard deviation of `c_tilde`.
    pub sd_c_tilde: f64,
}

#[derive(Clone, Copy, Debug)]
struct TrialOutcome {
    c_hat: f64,
    c_tilde: f64,
}

fn run_one(
    coeffs: &CoefficientVector,
    fp: &crate::fingerprint::Fingerprint,
    k: u64,
) -> Result<TrialOutcome> {
    // An empty sample sees nothing; report zero rather than failing the run.
    if fp.is_empty() {
        return Ok(TrialOutcome {
            c_hat: 0.0,
            c_tilde: 0.0,
        });
    }
    let r = estimate(fp, coeffs, k)?;
    Ok(TrialOutcome {
        c_hat: r.c_hat as f64,
        c_tilde: r.c_tilde,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = xs.fold((0.0, 0), |(s, c), x| (s + x, c + 1));
    (if count == 0 { 0.0 } else { sum / count as f64 }, count)
}

fn sample_sd(xs: &[f64], mu: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn aggregate(
    n: u64,
    estimator: EstimatorKind,
    urn: &UrnSpec,
    outcomes: &[TrialOutcome],
    bias_exact: Option<f64>,
) -> RiskRow {
    let c_true = urn.distinct() as f64;
    let (mean_c_hat, trials) = mean(outcomes.iter().map(|o| o.c_hat));
    let (mse, _) = mean(outcomes.iter().map(|o| (o.c_hat - c_true).powi(2)));
    let (mean_c_tilde, _) = mean(outcomes.iter().map(|o| o.c_tilde));
    let tildes: Vec<f64> = outcomes.iter().map(|o| o.c_tilde).collect();
    let rmse = mse.sqrt();
    RiskRow {
        n,
        estimator,
        trials: trials as u64,
        c_true: urn.distinct(),
        mean_c_hat,
        rmse,
        normalized_rmse: rmse / urn.k() as f64,
        bias_empirical: mean_c_hat - c_true,
        bias_exact,
        mean_c_tilde,
        bias_unclamped: mean_c_tilde - c_true,
        sd_c_tilde: sample_sd(&tildes, mean_c_tilde),
    }
}

/// Per-trial outcomes for every estimator on one urn at one grid point.
/// Trial `t` at grid index `i` draws from stream `(seed, t, i)`, so all
/// estimators see the same samples and enlarging the grid leaves earlier
/// columns untouched.
fn simulate_cell(
    urn: &UrnSpec,
    model: ModelTag,
    n: u64,
    n_index: u64,
    trials: u64,
    seed: u64,
    extra_key: Option<u64>,
    coeffs: &[std::sync::Arc<CoefficientVector>],
) -> Result<Vec<Vec<TrialOutcome>>> {
    let per_trial: Vec<Vec<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let stream = match extra_key {
                None => RngStream::keyed(seed, &[t, n_index]),
                Some(x) => RngStream::keyed(seed, &[t, n_index, x]),
            };
            let batch = draw(urn, model, n, stream)?;
            let fp = fingerprint_of(&batch.draws);
            coeffs.iter().map(|c| run_one(c, &fp, urn.k())).collect()
        })
        .collect::<Result<_>>()?;
    // Transpose to estimator-major, keeping trial order.
    Ok((0..coeffs.len())
        .map(|e| per_trial.iter().map(|row| row[e]).collect())
        .collect())
}

/// Risk of each configured estimator at each grid point.
pub fn run_risk_curve(cfg: &ExperimentConfig) -> Result<Vec<RiskRow>> {
    cfg.validate()?;
    let urn = cfg.resolve_urn()?;
    risk_curve_for_urn(cfg, &urn)
}

/// [`run_risk_curve`] on an already built urn.
pub fn risk_curve_for_urn(cfg: &ExperimentConfig, urn: &UrnSpec) -> Result<Vec<RiskRow>> {
    cfg.validate()?;
    cfg.check_sizes(urn.k())?;
    let cache = CoefficientCache::new();
    let mut rows = Vec::new();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let coeffs = cfg
            .estimators
            .iter()
            .map(|e| e.coefficients(urn.k(), n, &cache))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = simulate_cell(urn, cfg.model, n, i as u64, cfg.trials, cfg.seed, None, &coeffs)?;
        for ((&kind, c), out) in cfg.estimators.iter().zip(&coeffs).zip(&outcomes) {
            let bias = (cfg.model == ModelTag::Poissonized).then(|| exact_bias(urn, c, n));
            rows.push(aggregate(n, kind, urn, out, bias));
        }
    }
    Ok(rows)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn risk_rows_to_csv(rows: &[RiskRow]) -> String {
    let mut out = format!("#schema={CSV_SCHEMA_VERSION}\n");
    out.push_str(
        "n,estimator,trials,c_true,mean_c_hat,rmse,normalized_rmse,bias_empirical,\
         bias_exact,mean_c_tilde,bias_unclamped,sd_c_tilde\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.estimator,
            r.trials,
            r.c_true,
            fmt_f64(r.mean_c_hat),
            fmt_f64(r.rmse),
            fmt_f64(r.normalized_rmse),
            fmt_f64(r.bias_empirical),
            fmt_opt(r.bias_exact),
            fmt_f64(r.mean_c_tilde),
            fmt_f64(r.bias_unclamped),
            fmt_f64(r.sd_c_tilde),
        );
    }
    out
}

#[derive(Serialize)]
struct JsonTable<'a, T> {
    schema: u32,
    rows: &'a [T],
}

pub fn rows_to_json<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&JsonTable {
        schema: CSV_SCHEMA_VERSION,
        rows,
    })?;
    s.push('\n');
    Ok(s)
}

/// One row of the hard-pair experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardPairRow {
    pub n: u64,
    pub estimator: EstimatorKind,
    pub trials: u64,
    /// Fraction of trials on the all-singletons urn with `|ĉ − C| >= Δ`.
    pub fail_null: f64,
    /// Same on the near-uniform alternative.
    pub fail_alt: f64,
}

/// Failure rates of each estimator on both urns of `make_hard_pair(k, Δ, seed)`.
pub fn hard_pair_experiment(
    k: u64,
    delta: u64,
    n_grid: &[u64],
    trials: u64,
    seed: u64,
    model: ModelTag,
    estimators: &[EstimatorKind],
) -> Result<Vec<HardPairRow>> {
    let pair = make_hard_pair(k, delta, seed)?;
    let cfg = ExperimentConfig {
        urn: UrnSource::HardPair { k, delta },
        model,
        n_grid: n_grid.to_vec(),
        trials,
        seed,
        estimators: estimators.to_vec(),
        outputs: default_outputs(),
    };
    cfg.validate()?;
    cfg.check_sizes(k)?;
    let cache = CoefficientCache::new();
    let mut rows = Vec::new();
    for (i, &n) in n_grid.iter().enumerate() {
        let coeffs = estimators
            .iter()
            .map(|e| e.coefficients(k, n, &cache))
            .collect::<Result<Vec<_>>>()?;
        let fail = |urn: &UrnSpec, which: u64| -> Result<Vec<f64>> {
            let c_true = urn.distinct() as f64;
            let out = simulate_cell(urn, model, n, i as u64, trials, seed, Some(which), &coeffs)?;
            Ok(out
                .iter()
                .map(|o| {
                    let hits = o.iter().filter(|t| (t.c_hat - c_true).abs() >= delta as f64).count();
                    hits as f64 / trials as f64
                })
                .collect())
        };
        let null = fail(&pair.null_urn, 0)?;
        let alt = fail(&pair.alt_urn, 1)?;
        for (e, &kind) in estimators.iter().enumerate() {
            rows.push(HardPairRow {
                n,
                estimator: kind,
                trials,
                fail_null: null[e],
                fail_alt: alt[e],
            });
        }
    }
    Ok(rows)
}

pub fn hard_pair_rows_to_csv(rows: &[HardPairRow]) -> String {
    let mut out = format!("#schema={CSV_SCHEMA_VERSION}\nn,estimator,trials,fail_null,fail_alt\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.estimator,
            r.trials,
            fmt_f64(r.fail_null),
            fmt_f64(r.fail_alt)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub j: u64,
    /// Pearson correlation of `Φ_0` and `Φ_j`; `None` when either is constant.
    pub corr: Option<f64>,
    /// `min(1, k·2^{−j/2})`, reported without assertion.
    pub bound: f64,
}

/// Pearson correlation, `None` when either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, _) = mean(x.iter().copied());
    let (my, _) = mean(y.iter().copied());
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Empirical correlation between the unseen count `Φ_0 = C − C_seen` and
/// `Φ_j` for `j` in `1..=j_max`, under Poisson sampling with mean `n`.
pub fn correlation_experiment(
    urn: &UrnSpec,
    n: u64,
    trials: u64,
    j_max: u64,
    seed: u64,
) -> Result<Vec<CorrelationRow>> {
    if trials < MIN_CORRELATION_TRIALS {
        return Err(Error::invalid(format!(
            "correlation needs at least {MIN_CORRELATION_TRIALS} trials, got {trials}"
        )));
    }
    let c = urn.distinct();
    let samples: Vec<(f64, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let batch = draw_poissonized(urn, n as f64, RngStream::new(seed, t))?;
            let fp = fingerprint_of(&batch.draws);
            let phi0 = (c - fp.c_seen()) as f64;
            let phis = (1..=j_max).map(|j| fp.get(j) as f64).collect();
            Ok((phi0, phis))
        })
        .collect::<Result<_>>()?;
    let phi0: Vec<f64> = samples.iter().map(|s| s.0).collect();
    Ok((1..=j_max)
        .map(|j| {
            let phij: Vec<f64> = samples.iter().map(|s| s.1[j as usize - 1]).collect();
            CorrelationRow {
                j,
                corr: pearson(&phi0, &phij),
                bound: (urn.k() as f64 * 2f64.powf(-(j as f64) / 2.0)).min(1.0),
            }
        })
        .collect())
}

pub fn correlation_rows_to_csv(rows: &[CorrelationRow]) -> String {
    let mut out = format!("#schema={CSV_SCHEMA_VERSION}\nj,corr,bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.j, fmt_opt(r.corr), fmt_f64(r.bound));
    }
    out
}

/// Runs a config and writes `risk.{csv,json}` or `hard_pair.{csv,json}`
/// into `out_dir`. Returns the written paths.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let (stem, csv, json) = match cfg.urn {
        UrnSource::HardPair { k, delta } => {
            let rows = hard_pair_experiment(
                k,
                delta,
                &cfg.n_grid,
                cfg.trials,
                cfg.seed,
                cfg.model,
                &cfg.estimators,
            )?;
            ("hard_pair", hard_pair_rows_to_csv(&rows), rows_to_json(&rows)?)
        }
        _ => {
            let rows = run_risk_curve(cfg)?;
            ("risk", risk_rows_to_csv(&rows), rows_to_json(&rows)?)
        }
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for format in &cfg.outputs {
        let (ext, body) = match format {
            OutputFormat::Csv => ("csv", &csv),
            OutputFormat::Json => ("json", &json),
        };
        let path = out_dir.join(format!("{stem}.{ext}"));
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
