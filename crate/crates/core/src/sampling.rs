//! The four sampling models and the without→with replacement simulation.
//!
//! Every sampler is a pure function of `(urn, parameters, RngStream)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::urn::{ColorId, UrnSpec};

/// Means below this use sequential-search inversion; above it, rejection.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Colors with at most this many balls get one coin flip per ball.
pub const BERNOULLI_COIN_FLIP_LIMIT: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    #[serde(alias = "multi")]
    Multinomial,
    #[serde(alias = "hyper")]
    Hypergeometric,
    #[serde(alias = "bern")]
    Bernoulli,
    #[serde(alias = "poi")]
    Poissonized,
    SimulatedWithReplacement,
}

impl ModelTag {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelTag::Multinomial => "multi",
            ModelTag::Hypergeometric => "hyper",
            ModelTag::Bernoulli => "bern",
            ModelTag::Poissonized => "poi",
            ModelTag::SimulatedWithReplacement => "sim-with",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "multi" | "multinomial" => ModelTag::Multinomial,
            "hyper" | "hypergeometric" => ModelTag::Hypergeometric,
            "bern" | "bernoulli" => ModelTag::Bernoulli,
            "poi" | "poisson" | "poissonized" => ModelTag::Poissonized,
            "sim-with" | "simulated-with-replacement" => ModelTag::SimulatedWithReplacement,
            other => return Err(Error::invalid(format!("unknown sampling model {other:?}"))),
        })
    }
}

/// Ordered draws plus the sample size that was asked for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub draws: Vec<ColorId>,
    /// Requested size, or the rounded expected size for randomized models.
    pub nominal_size: u64,
    pub model: ModelTag,
}

impl SampleBatch {
    pub fn realized_size(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// The first `m` draws as a new batch (used by the sample-size adapters).
    pub fn prefix(&self, m: usize) -> SampleBatch {
        SampleBatch {
            draws: self.draws[..m.min(self.draws.len())].to_vec(),
            nominal_size: m as u64,
            model: self.model,
        }
    }
}

/// Poisson variate: inversion by sequential search below
/// [`POISSON_INVERSION_LIMIT`], otherwise `rand_distr`'s transformed rejection.
pub fn poisson_variate<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < POISSON_INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                // Tail mass below f64 resolution.
                break;
            }
            cdf = next;
        }
        k
    } else {
        Poisson::new(mean)
            .expect("finite positive mean")
            .sample(rng) as u64
    }
}

fn binomial_variate<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials <= BERNOULLI_COIN_FLIP_LIMIT {
        (0..trials).filter(|_| rng.random_bool(p)).count() as u64
    } else {
        Binomial::new(trials, p).expect("p checked").sample(rng)
    }
}

/// Expands per-color counts into a uniformly shuffled draw list.
fn shuffled_expansion<R: Rng + ?Sized>(counts: &[(ColorId, u64)], rng: &mut R) -> Vec<ColorId> {
    let total: u64 = counts.iter().map(|&(_, c)| c).sum();
    let mut draws = Vec::with_capacity(total as usize);
    for &(id, c) in counts {
        draws.extend(std::iter::repeat_n(id, c as usize));
    }
    draws.shuffle(rng);
    draws
}

pub fn draw_with_replacement(urn: &UrnSpec, n: u64, stream: RngStream) -> SampleBatch {
    let mut rng = stream.rng();
    let mut cumulative = Vec::with_capacity(urn.colors().len());
    let mut acc = 0u64;
    for &(_, c) in urn.colors() {
        acc += c;
        cumulative.push(acc);
    }
    let k = urn.k();
    let draws = (0..n)
        .map(|_| {
            let ball = rng.random_range(0..k);
            let idx = cumulative.partition_point(|&c| c <= ball);
            urn.colors()[idx].0
        })
        .collect();
    SampleBatch {
        draws,
        nominal_size: n,
        model: ModelTag::Multinomial,
    }
}

pub fn draw_without_replacement(urn: &UrnSpec, n: u64, stream: RngStream) -> Result<SampleBatch> {
    if n > urn.k() {
        return Err(Error::invalid(format!(
            "cannot draw {n} balls without replacement from an urn of {}",
            urn.k()
        )));
    }
    let mut rng = stream.rng();
    let mut balls = urn.balls();
    let n = n as usize;
    for i in 0..n {
        let j = rng.random_range(i..balls.len());
        balls.swap(i, j);
    }
    balls.truncate(n);
    Ok(SampleBatch {
        draws: balls,
        nominal_size: n as u64,
        model: ModelTag::Hypergeometric,
    })
}

pub fn draw_bernoulli(urn: &UrnSpec, p: f64, stream: RngStream) -> Result<SampleBatch> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("inclusion probability {p} outside [0, 1]")));
    }
    let mut rng = stream.rng();
    let counts: Vec<(ColorId, u64)> = urn
        .colors()
        .iter()
        .map(|&(id, c)| (id, binomial_variate(c, p, &mut rng)))
        .collect();
    Ok(SampleBatch {
        draws: shuffled_expansion(&counts, &mut rng),
        nominal_size: (urn.k() as f64 * p).round() as u64,
        model: ModelTag::Bernoulli,
    })
}

pub fn draw_poissonized(urn: &UrnSpec, n: f64, stream: RngStream) -> Result<SampleBatch> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::invalid(format!("expected sample size {n} must be finite and >= 0")));
    }
    let mut rng = stream.rng();
    let scale = n / urn.k() as f64;
    let counts: Vec<(ColorId, u64)> = urn
        .colors()
        .iter()
        .map(|&(id, c)| (id, poisson_variate(scale * c as f64, &mut rng)))
        .collect();
    Ok(SampleBatch {
        draws: shuffled_expansion(&counts, &mut rng),
        nominal_size: n.round() as u64,
        model: ModelTag::Poissonized,
    })
}

/// Turns draws without replacement from a `k`-ball urn into draws with
/// replacement: `X_i = Y_i` with probability `1 − (i−1)/k`, otherwise a
/// uniformly chosen earlier `Y_m`.
pub fn simulate_with_from_without(
    batch: &SampleBatch,
    k: u64,
    stream: RngStream,
) -> Result<SampleBatch> {
    let n = batch.draws.len();
    if n as u64 > k {
        return Err(Error::invalid(format!(
            "batch of {n} draws cannot come without replacement from {k} balls"
        )));
    }
    let mut rng = stream.rng();
    let draws = batch
        .draws
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            // i is zero-based, so i earlier draws exist.
            if i == 0 || rng.random_range(0..k) >= i as u64 {
                y
            } else {
                batch.draws[rng.random_range(0..i)]
            }
        })
        .collect();
    Ok(SampleBatch {
        draws,
        nominal_size: n as u64,
        model: ModelTag::SimulatedWithReplacement,
    })
}

/// Draws a batch under `model`. `size` is `n` for the fixed-size and
/// Poisson models and the expected size `k·p` for Bernoulli.
pub fn draw(urn: &UrnSpec, model: ModelTag, size: u64, stream: RngStream) -> Result<SampleBatch> {
    match model {
        ModelTag::Multinomial => Ok(draw_with_replacement(urn, size, stream)),
        ModelTag::Hypergeometric => draw_without_replacement(urn, size, stream),
        ModelTag::Bernoulli => draw_bernoulli(urn, (size as f64 / urn.k() as f64).min(1.0), stream),
        ModelTag::Poissonized => draw_poissonized(urn, size as f64, stream),
        ModelTag::SimulatedWithReplacement => {
            let without = draw_without_replacement(urn, size, stream)?;
            let follow = RngStream::keyed(stream.master_seed, &[stream.stream_index, 1]);
            simulate_with_from_without(&without, urn.k(), follow)
        }
    }
}

pub fn parse_samples(text: &str) -> Result<Vec<ColorId>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            l.parse()
                .map_err(|e| Error::parse(line, format!("bad color id {l:?}: {e}")))
        })
        .collect()
}

pub fn serialize_samples(draws: &[ColorId]) -> String {
    let mut out = String::with_capacity(draws.len() * 4);
    for id in draws {
        out.push_str(&id.to_string());
        out.push('\n');
    }
    out
}
