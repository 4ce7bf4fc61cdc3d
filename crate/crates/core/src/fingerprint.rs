//! Histograms and fingerprints: the sufficient statistics of a sample.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urn::ColorId;

/// `counts[c]` is how many times color `c` was drawn; unseen colors are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: BTreeMap<ColorId, u64>,
}

impl Histogram {
    pub fn sample_size(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub fn histogram(draws: &[ColorId]) -> Histogram {
    let mut counts = BTreeMap::new();
    for &d in draws {
        *counts.entry(d).or_insert(0) += 1;
    }
    Histogram { counts }
}

/// `phi[j]` is the number of colors seen exactly `j` times (`j >= 1`).
///
/// The number of unseen colors is deliberately not represented.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    phi: BTreeMap<u64, u64>,
    c_seen: u64,
}

impl Fingerprint {
    /// Builds a fingerprint from `(j, Φ_j)` pairs; zero counts are dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut phi = BTreeMap::new();
        for (j, count) in pairs {
            if j == 0 {
                return Err(Error::invalid("fingerprint index j must be >= 1"));
            }
            if count > 0 {
                *phi.entry(j).or_insert(0) += count;
            }
        }
        let c_seen = phi.values().sum();
        Ok(Fingerprint { phi, c_seen })
    }

    pub fn phi(&self) -> &BTreeMap<u64, u64> {
        &self.phi
    }

    pub fn get(&self, j: u64) -> u64 {
        self.phi.get(&j).copied().unwrap_or(0)
    }

    pub fn c_seen(&self) -> u64 {
        self.c_seen
    }

    /// `Σ j·Φ_j`, the number of draws that produced this fingerprint.
    pub fn sample_size(&self) -> u64 {
        self.phi.iter().map(|(j, c)| j * c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Dense view `[Φ_1, …, Φ_jmax]`.
    pub fn dense(&self, j_max: usize) -> Vec<u64> {
        (1..=j_max as u64).map(|j| self.get(j)).collect()
    }
}

pub fn fingerprint(h: &Histogram) -> Fingerprint {
    let mut phi = BTreeMap::new();
    for &n in h.counts.values() {
        *phi.entry(n).or_insert(0) += 1;
    }
    Fingerprint {
        c_seen: h.counts.len() as u64,
        phi,
    }
}

pub fn fingerprint_of(draws: &[ColorId]) -> Fingerprint {
    fingerprint(&histogram(draws))
}

/// Parses `j count` lines (`#` comments allowed).
pub fn parse_fingerprint(text: &str) -> Result<Fingerprint> {
    let mut pairs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(j), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(line_no, format!("expected `j count`, got {raw:?}")));
        };
        let j: u64 = j
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad index {j:?}: {e}")))?;
        let count: u64 = count
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad count {count:?}: {e}")))?;
        if j == 0 {
            return Err(Error::parse(line_no, "index j must be >= 1 (unseen colors are not observable)"));
        }
        if !seen.insert(j) {
            return Err(Error::parse(line_no, format!("duplicate index {j}")));
        }
        pairs.push((j, count));
    }
    Fingerprint::from_counts(pairs)
}

pub fn serialize_fingerprint(fp: &Fingerprint) -> String {
    let mut out = String::new();
    for (j, c) in fp.phi() {
        let _ = writeln!(out, "{j} {c}");
    }
    out
}
