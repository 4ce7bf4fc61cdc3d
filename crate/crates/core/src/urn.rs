//! Urn instances: a multiset of colored balls.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type ColorId = u64;

/// Stream index used when a hard pair partitions its color ids.
const HARD_PAIR_STREAM: u64 = 0x4841_5244; // "HARD"

/// A population of `k` balls over `C` distinct colors.
///
/// Entries are kept sorted by color id; every multiplicity is at least one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(ColorId, u64)>", into = "Vec<(ColorId, u64)>")]
pub struct UrnSpec {
    colors: Vec<(ColorId, u64)>,
    total: u64,
}

impl UrnSpec {
    pub fn new(mut colors: Vec<(ColorId, u64)>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::EmptyUrn);
        }
        colors.sort_unstable_by_key(|&(id, _)| id);
        let mut total = 0u64;
        for (i, &(id, count)) in colors.iter().enumerate() {
            if count == 0 {
                return Err(Error::invalid(format!("color {id} has zero multiplicity")));
            }
            if i > 0 && colors[i - 1].0 == id {
                return Err(Error::invalid(format!("duplicate color id {id}")));
            }
            total = total
                .checked_add(count)
                .ok_or_else(|| Error::invalid("total ball count overflows u64"))?;
        }
        Ok(UrnSpec { colors, total })
    }

    /// Total number of balls.
    pub fn k(&self) -> u64 {
        self.total
    }

    /// Number of distinct colors.
    pub fn distinct(&self) -> u64 {
        self.colors.len() as u64
    }

    pub fn colors(&self) -> &[(ColorId, u64)] {
        &self.colors
    }

    pub fn multiplicities(&self) -> impl Iterator<Item = u64> + '_ {
        self.colors.iter().map(|&(_, c)| c)
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.multiplicities().max().unwrap_or(0)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (ColorId, f64)> + '_ {
        let k = self.total as f64;
        self.colors.iter().map(move |&(id, c)| (id, c as f64 / k))
    }

    /// Expands the urn into one entry per ball, colors in id order.
    pub fn balls(&self) -> Vec<ColorId> {
        let mut out = Vec::with_capacity(self.total as usize);
        for &(id, count) in &self.colors {
            out.extend(std::iter::repeat_n(id, count as usize));
        }
        out
    }
}

impl TryFrom<Vec<(ColorId, u64)>> for UrnSpec {
    type Error = Error;

    fn try_from(colors: Vec<(ColorId, u64)>) -> Result<Self> {
        UrnSpec::new(colors)
    }
}

impl From<UrnSpec> for Vec<(ColorId, u64)> {
    fn from(urn: UrnSpec) -> Self {
        urn.colors
    }
}

/// Urn with `c` colors (ids `0..c`) and multiplicities as equal as possible.
/// The larger multiplicity goes to the lowest ids.
pub fn make_uniform_support(k: u64, c: u64) -> Result<UrnSpec> {
    if c == 0 || c > k {
        return Err(Error::invalid(format!(
            "need 1 <= C <= k, got C={c}, k={k}"
        )));
    }
    let base = k / c;
    let extra = k % c;
    let colors = (0..c)
        .map(|id| (id, if id < extra { base + 1 } else { base }))
        .collect();
    UrnSpec::new(colors)
}

/// Least-favorable pair: `k` singletons against `k - 2Δ` near-uniform colors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardInstancePair {
    pub null_urn: UrnSpec,
    pub alt_urn: UrnSpec,
    pub delta: u64,
    /// Smaller multiplicity `⌊k/(k−2Δ)⌋`.
    pub b1: u64,
    /// Larger multiplicity `⌈k/(k−2Δ)⌉`.
    pub b2: u64,
    /// Number of alternative colors with multiplicity `b1`.
    pub c1: u64,
    /// Number of alternative colors with multiplicity `b2`.
    pub c2: u64,
}

impl HardInstancePair {
    /// Alternative color ids carrying multiplicity `b2`.
    pub fn heavy_colors(&self) -> impl Iterator<Item = ColorId> + '_ {
        let b2 = self.b2;
        let split = self.b1 != self.b2;
        self.alt_urn
            .colors()
            .iter()
            .filter(move |&&(_, c)| split && c == b2)
            .map(|&(id, _)| id)
    }
}

pub fn make_hard_pair(k: u64, delta: u64, seed: u64) -> Result<HardInstancePair> {
    if delta == 0 || k < 4 || delta > k / 2 - 1 {
        return Err(Error::invalid(format!(
            "need 1 <= delta <= k/2 - 1, got delta={delta}, k={k}"
        )));
    }
    let alt_colors = k - 2 * delta;
    let b1 = k / alt_colors;
    let c2 = k % alt_colors;
    let b2 = if c2 == 0 { b1 } else { b1 + 1 };
    let c1 = alt_colors - c2;

    // Pick which of the k null ids survive in the alternative (partial Fisher-Yates).
    let mut ids: Vec<ColorId> = (0..k).collect();
    let mut rng = RngStream::new(seed, HARD_PAIR_STREAM).rng();
    for i in 0..alt_colors as usize {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    let alt = ids[..alt_colors as usize]
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, if (i as u64) < c2 { b2 } else { b1 }))
        .collect();

    Ok(HardInstancePair {
        null_urn: make_uniform_support(k, k)?,
        alt_urn: UrnSpec::new(alt)?,
        delta,
        b1,
        b2,
        c1,
        c2,
    })
}

/// Parses the urn text format: `color_id count` per line, `#` comments.
pub fn parse_urn(text: &str) -> Result<UrnSpec> {
    let mut colors = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(id), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(line_no, format!("expected `color_id count`, got {raw:?}")));
        };
        let id: ColorId = id
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad color id {id:?}: {e}")))?;
        let count: u64 = count
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad count {count:?}: {e}")))?;
        if count == 0 {
            return Err(Error::parse(line_no, format!("color {id} has zero count")));
        }
        if !seen.insert(id) {
            return Err(Error::parse(line_no, format!("duplicate color id {id}")));
        }
        colors.push((id, count));
    }
    if colors.is_empty() {
        return Err(Error::EmptyUrn);
    }
    UrnSpec::new(colors)
}

/// Canonical text form: ids strictly increasing, no trailing newline.
pub fn serialize_urn(urn: &UrnSpec) -> String {
    let mut out = String::new();
    for (i, (id, count)) in urn.colors().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{id} {count}");
    }
    out
}
