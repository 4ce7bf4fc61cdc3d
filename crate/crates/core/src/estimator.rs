//! Parameter selection, coefficient construction, the clamped linear
//! estimate, and the exact Poisson-model bias.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientVector, Regime};
use crate::error::{Error, Result};
use crate::exact::{self, rational};
use crate::fingerprint::{fingerprint_of, Fingerprint};
use crate::orthopoly::solve_l2;
use crate::rng::RngStream;
use crate::sampling::poisson_variate;
use crate::stirling::{interp_coeffs, MAX_EXACT_N};
use crate::urn::{ColorId, UrnSpec};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_ETA: f64 = 1.0;
/// `β` used by the interpolation regime, which then takes `α = βk/n` so that `L = M`.
pub const INTERPOLATION_BETA: f64 = 3.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    pub k: u64,
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    /// Degree `L`.
    #[serde(rename = "L")]
    pub degree: usize,
    /// Node count `M`.
    #[serde(rename = "M")]
    pub nodes: usize,
    pub regime: Regime,
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.n == 0 {
            return Err(Error::invalid(format!(
                "need k >= 2 and n >= 1, got k={}, n={}",
                self.k, self.n
            )));
        }
        if self.degree == 0 || self.nodes == 0 {
            return Err(Error::invalid("L and M must be >= 1"));
        }
        match self.regime {
            Regime::L2 if self.nodes <= self.degree => Err(Error::invalid(format!(
                "l2 regime needs M >= L + 1, got M={}, L={}",
                self.nodes, self.degree
            ))),
            Regime::Interpolation if self.nodes != self.degree => Err(Error::invalid(format!(
                "interpolation regime needs L = M, got L={}, M={}",
                self.degree, self.nodes
            ))),
            _ => Ok(()),
        }
    }

    /// Exponent `β − α·ln(eβ/α) − 3` of the `k^{−(…)}` failure term.
    pub fn failure_exponent(&self) -> f64 {
        self.beta - self.alpha * (std::f64::consts::E * self.beta / self.alpha).ln() - 3.0
    }
}

fn resolve(overrides: &ParamOverrides) -> Result<(f64, f64, f64)> {
    let alpha = overrides.alpha.unwrap_or(DEFAULT_ALPHA);
    let beta = overrides.beta.unwrap_or(DEFAULT_BETA);
    let eta = overrides.eta.unwrap_or(DEFAULT_ETA);
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta > alpha) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must exceed alpha, got beta={beta}, alpha={alpha}")));
    }
    if !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be finite, got {eta}")));
    }
    Ok((alpha, beta, eta))
}

fn ceil_at_least_one(v: f64) -> usize {
    (v.ceil() as usize).max(1)
}

/// Picks the regime and `(L, M)`: interpolation with `L = M = ⌈3.5(k/n)ln k⌉`
/// once `n > ηk`, otherwise `L = ⌈α ln k⌉`, `M = max(⌈βk ln k/n⌉, L+1)`.
pub fn select_params(k: u64, n: u64, overrides: &ParamOverrides) -> Result<EstimatorParams> {
    if k < 2 || n == 0 {
        return Err(Error::invalid(format!("need k >= 2 and n >= 1, got k={k}, n={n}")));
    }
    let (_, _, eta) = resolve(overrides)?;
    let regime = if n as f64 > eta * k as f64 {
        Regime::Interpolation
    } else {
        Regime::L2
    };
    params_for_regime(k, n, regime, overrides)
}

/// Like [`select_params`] but with the regime forced.
pub fn params_for_regime(
    k: u64,
    n: u64,
    regime: Regime,
    overrides: &ParamOverrides,
) -> Result<EstimatorParams> {
    if k < 2 || n == 0 {
        return Err(Error::invalid(format!("need k >= 2 and n >= 1, got k={k}, n={n}")));
    }
    let (alpha, beta, eta) = resolve(overrides)?;
    let log_k = (k as f64).ln();
    let ratio = k as f64 / n as f64;
    let params = match regime {
        Regime::Interpolation => {
            let size = ceil_at_least_one(INTERPOLATION_BETA * ratio * log_k);
            EstimatorParams {
                k,
                n,
                alpha: INTERPOLATION_BETA * ratio,
                beta: INTERPOLATION_BETA,
                eta,
                degree: size,
                nodes: size,
                regime,
            }
        }
        Regime::L2 => {
            let degree = ceil_at_least_one(alpha * log_k);
            let nodes = ceil_at_least_one(beta * ratio * log_k).max(degree + 1);
            EstimatorParams {
                k,
                n,
                alpha,
                beta,
                eta,
                degree,
                nodes,
                regime,
            }
        }
    };
    params.validate()?;
    Ok(params)
}

pub fn build_estimator(params: &EstimatorParams) -> Result<CoefficientVector> {
    params.validate()?;
    match params.regime {
        Regime::L2 => {
            let poly = solve_l2(params.nodes, params.degree)?;
            CoefficientVector::bind(poly, params.k, params.n)
        }
        Regime::Interpolation => {
            if params.nodes + 1 > MAX_EXACT_N {
                return Err(Error::Parameterization(format!(
                    "interpolation needs M = {} nodes, beyond the exact Stirling table \
                     (M <= {}); the sample is too small for interpolation, use the l2 regime",
                    params.nodes,
                    MAX_EXACT_N - 1
                )));
            }
            interp_coeffs(params.nodes, params.k, params.n).map_err(|e| match e {
                Error::CoefficientOverflow { index, log_abs } => Error::Parameterization(format!(
                    "interpolation weight u_{index} has magnitude e^{log_abs:.0} for \
                     k={}, n={}, M={}; the sample is too small for interpolation, \
                     use the l2 regime",
                    params.k, params.n, params.nodes
                )),
                other => other,
            })
        }
    }
}

type CacheKey = (u64, u64, usize, usize, Regime);

/// Read-mostly map from `(k, n, L, M, regime)` to built coefficients.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    map: RwLock<HashMap<CacheKey, Arc<CoefficientVector>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, params: &EstimatorParams) -> Result<Arc<CoefficientVector>> {
        let key = (params.k, params.n, params.degree, params.nodes, params.regime);
        if let Some(hit) = self.map.read().expect("cache lock poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(build_estimator(params)?);
        let mut map = self.map.write().expect("cache lock poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub c_hat: u64,
    pub c_tilde: f64,
    pub c_seen: u64,
    pub regime: Regime,
    #[serde(rename = "L")]
    pub degree: usize,
    #[serde(rename = "M")]
    pub nodes: usize,
    pub coeffs_digest: String,
}

/// `C̃ = C_seen + Σ_{j<=L} u_j Φ_j`, then `Ĉ = round(clamp(C̃, C_seen, k))`
/// with ties to even.
pub fn estimate(fp: &Fingerprint, coeffs: &CoefficientVector, k: u64) -> Result<EstimateResult> {
    if fp.is_empty() {
        return Err(Error::EmptyFingerprint);
    }
    let c_seen = fp.c_seen();
    let correction: f64 = fp
        .phi()
        .iter()
        .map(|(&j, &count)| coeffs.u(j) * count as f64)
        .sum();
    let c_tilde = c_seen as f64 + correction;
    if c_tilde.is_nan() {
        return Err(Error::Parameterization(
            "estimate is NaN; coefficients are not finite".into(),
        ));
    }
    let clamped = c_tilde.clamp(c_seen as f64, k.max(c_seen) as f64);
    Ok(EstimateResult {
        c_hat: clamped.round_ties_even() as u64,
        c_tilde,
        c_seen,
        regime: coeffs.kind(),
        degree: coeffs.degree(),
        nodes: coeffs.nodes(),
        coeffs_digest: coeffs.digest(),
    })
}

fn multiplicity_counts(urn: &UrnSpec) -> BTreeMap<u64, u64> {
    let mut by_mult = BTreeMap::new();
    for a in urn.multiplicities() {
        *by_mult.entry(a).or_insert(0) += 1;
    }
    by_mult
}

/// `E[C̃] − C = Σ_i e^{−n k_i/k}(φ(k_i) − 1)` under Poisson sampling with mean
/// `n`, where `φ(a) = Σ_j u_j (a n/k)^j / j!`. The sum is exact: `u_j = 0`
/// beyond `L`.
pub fn exact_bias(urn: &UrnSpec, coeffs: &CoefficientVector, n: u64) -> f64 {
    let k = urn.k() as f64;
    let n = n as f64;
    multiplicity_counts(urn)
        .into_iter()
        .map(|(a, count)| {
            let a = a as f64;
            count as f64 * (-n * a / k).exp() * (coeffs.phi(a, n, k) - 1.0)
        })
        .sum()
}

/// Bias with `φ(a) − 1` kept exact for each urn multiplicity.
#[derive(Clone, Debug)]
pub struct RationalBias {
    /// Multiplicity `a` → `(number of colors, φ(a) − 1)`.
    pub deviations: BTreeMap<u64, (u64, BigRational)>,
    /// `Σ e^{−λ}(φ(a) − 1)` with only the exponential weights in `f64`.
    pub value: f64,
}

impl RationalBias {
    pub fn is_exactly_zero(&self) -> bool {
        self.deviations.values().all(|(_, d)| d.is_zero())
    }
}

/// Rational-mode bias. Needs exact `w` and the `(k, n)` the coefficients were
/// built for, under which `φ(a) = p(a/M)` exactly.
pub fn exact_bias_rational(urn: &UrnSpec, coeffs: &CoefficientVector) -> Option<RationalBias> {
    let nodes = coeffs.nodes() as i64;
    let (k, n) = (urn.k() as f64, coeffs.n as f64);
    let mut deviations = BTreeMap::new();
    let mut value = 0.0;
    for (a, count) in multiplicity_counts(urn) {
        // φ(a) = p(a·(n_c/k_c)·(k_c/(n_c M))) = p(a/M) when urn.k() matches.
        let x = rational(a as i64, nodes)
            * rational(urn.k() as i64, coeffs.k as i64);
        let dev = coeffs.poly.eval_exact(&x)? - BigRational::one();
        value += count as f64 * (-n * a as f64 / k).exp() * exact::to_f64(&dev);
        deviations.insert(a, (count, dev));
    }
    Some(RationalBias { deviations, value })
}

/// `max_{m∈[M]} E_{N~Poi(nm/k)}[u_N²]`, the variance term of the risk bound.
/// The expectation is a finite sum since `u_N = 0` for `N > L`.
pub fn variance_diagnostic(coeffs: &CoefficientVector) -> f64 {
    let ratio = coeffs.n as f64 / coeffs.k as f64;
    (1..=coeffs.nodes())
        .map(|m| {
            let lambda = ratio * m as f64;
            let mut log_fact = 0.0;
            let logs: Vec<f64> = coeffs
                .u
                .iter()
                .enumerate()
                .filter_map(|(i, &u)| {
                    let j = (i + 1) as f64;
                    log_fact += j.ln();
                    (u != 0.0).then(|| 2.0 * u.abs().ln() - lambda + j * lambda.ln() - log_fact)
                })
                .collect();
            log_sum_exp(&logs)
        })
        .fold(0.0, f64::max)
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let Some(max) = logs.iter().copied().reduce(f64::max) else {
        return 0.0;
    };
    max.exp() * logs.iter().map(|l| (l - max).exp()).sum::<f64>()
}

/// Coefficients plus the parameters that produced them.
#[derive(Clone, Debug)]
pub struct Estimator {
    pub params: EstimatorParams,
    pub coeffs: Arc<CoefficientVector>,
}

impl Estimator {
    pub fn new(params: EstimatorParams) -> Result<Self> {
        Ok(Estimator {
            coeffs: Arc::new(build_estimator(&params)?),
            params,
        })
    }

    pub fn with_cache(params: EstimatorParams, cache: &CoefficientCache) -> Result<Self> {
        Ok(Estimator {
            coeffs: cache.get_or_build(&params)?,
            params,
        })
    }

    pub fn estimate(&self, fp: &Fingerprint) -> Result<EstimateResult> {
        estimate(fp, &self.coeffs, self.params.k)
    }
}

/// Anything that maps a list of draws to an estimate of the color count.
pub trait SampleEstimator {
    /// `stream` feeds any internal randomization; deterministic estimators ignore it.
    fn estimate_draws(&self, draws: &[ColorId], stream: RngStream) -> Result<f64>;
}

impl SampleEstimator for Estimator {
    fn estimate_draws(&self, draws: &[ColorId], _stream: RngStream) -> Result<f64> {
        Ok(self.estimate(&fingerprint_of(draws))?.c_hat as f64)
    }
}

/// Law of a random sample size `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSizeLaw {
    Poisson { mean: f64 },
    Binomial { trials: u64, p: f64 },
}

impl SampleSizeLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            SampleSizeLaw::Poisson { mean } => poisson_variate(mean, rng),
            SampleSizeLaw::Binomial { trials, p } => {
                use rand_distr::{Binomial, Distribution};
                Binomial::new(trials, p).map(|b| b.sample(rng)).unwrap_or(0)
            }
        }
    }
}

/// Runs a fixed-`n` estimator on a random number `N` of draws: the first `n`
/// draws when `N >= n`, otherwise the output is 0.
pub struct FixedToRandomized<E> {
    pub inner: E,
    pub n: usize,
}

impl<E: SampleEstimator> SampleEstimator for FixedToRandomized<E> {
    fn estimate_draws(&self, draws: &[ColorId], stream: RngStream) -> Result<f64> {
        if draws.len() < self.n {
            return Ok(0.0);
        }
        self.inner.estimate_draws(&draws[..self.n], stream)
    }
}

/// Runs an estimator built for a random sample size on exactly `n` draws:
/// draw `m` from the size law, use the first `m` draws if `m <= n`, else 0.
pub struct RandomizedToFixed<E> {
    pub inner: E,
    pub n: usize,
    pub law: SampleSizeLaw,
}

impl<E: SampleEstimator> SampleEstimator for RandomizedToFixed<E> {
    fn estimate_draws(&self, draws: &[ColorId], stream: RngStream) -> Result<f64> {
        let m = self.law.sample(&mut stream.rng()) as usize;
        if m > self.n || m > draws.len() {
            return Ok(0.0);
        }
        let follow = RngStream::keyed(stream.master_seed, &[stream.stream_index, 1]);
        self.inner.estimate_draws(&draws[..m], follow)
    }
}

pub fn adapt_fixed_to_randomized<E: SampleEstimator>(inner: E, n: usize) -> FixedToRandomized<E> {
    FixedToRandomized { inner, n }
}

pub fn adapt_randomized_to_fixed<E: SampleEstimator>(
    inner: E,
    n: usize,
    law: SampleSizeLaw,
) -> RandomizedToFixed<E> {
    RandomizedToFixed { inner, n, law }
}
