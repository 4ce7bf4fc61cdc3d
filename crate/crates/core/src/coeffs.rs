//! Polynomial and estimator coefficient vectors.
//!
//! A [`NodePolynomial`] is `p(x) = Σ_{j=1..L} w_j x^j` on the nodes
//! `{1/M, …, 1}`. Binding it to an urn size `k` and sample size `n` gives the
//! estimator weights `u_j = w_j · j! · (k/(nM))^j` of a [`CoefficientVector`].

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{self, rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Least-squares fit of the constant on `M > L` nodes.
    L2,
    /// Interpolation of the constant on `M = L` nodes.
    Interpolation,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::L2 => "l2",
            Regime::Interpolation => "interpolation",
        })
    }
}

/// Polynomial without constant term, evaluated on the grid `a/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodePolynomial {
    pub kind: Regime,
    /// Number of nodes `M`.
    pub nodes: usize,
    /// Degree `L`.
    pub degree: usize,
    /// `w_1..w_L` rounded to `f64`.
    pub w: Vec<f64>,
    /// `w_1..w_L` exactly, when the construction produced them.
    pub exact: Option<Vec<BigRational>>,
}

impl NodePolynomial {
    pub fn from_exact(kind: Regime, nodes: usize, exact_w: Vec<BigRational>) -> Self {
        NodePolynomial {
            kind,
            nodes,
            degree: exact_w.len(),
            w: exact_w.iter().map(exact::to_f64).collect(),
            exact: Some(exact_w),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.w.iter().rev().fold(0.0, |acc, &wj| (acc + wj) * x)
    }

    pub fn eval_exact(&self, x: &BigRational) -> Option<BigRational> {
        let w = self.exact.as_ref()?;
        Some(
            w.iter()
                .rev()
                .fold(BigRational::zero(), |acc, wj| (acc + wj) * x),
        )
    }

    /// `p(a/M) − 1` for `a = 1..=M`, exactly.
    pub fn node_deviations_exact(&self) -> Option<Vec<BigRational>> {
        let m = self.nodes as i64;
        (1..=m)
            .map(|a| self.eval_exact(&rational(a, m)).map(|v| v - BigRational::one()))
            .collect()
    }

    /// `‖Bw − 1‖₂` from the exact coefficients (falls back to `f64`).
    pub fn residual_l2(&self) -> f64 {
        match self.node_deviations_exact() {
            Some(devs) => {
                let ss = devs.iter().fold(BigRational::zero(), |acc, d| acc + d * d);
                exact::to_f64(&ss).sqrt()
            }
            None => self.residual_l2_float(),
        }
    }

    pub fn residual_l2_float(&self) -> f64 {
        let m = self.nodes as f64;
        (1..=self.nodes)
            .map(|a| (self.eval(a as f64 / m) - 1.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `max_a |p(a/M) − 1|` evaluated in `f64`.
    pub fn max_node_error_float(&self) -> f64 {
        let m = self.nodes as f64;
        (1..=self.nodes)
            .map(|a| (self.eval(a as f64 / m) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_a |p(a/M) − 1|` in exact arithmetic.
    pub fn max_node_error_exact(&self) -> Option<BigRational> {
        let devs = self.node_deviations_exact()?;
        Some(
            devs.into_iter()
                .map(|d| d.abs())
                .fold(BigRational::zero(), |a, b| if b > a { b } else { a }),
        )
    }
}

/// `u_j = w_j · j! · (k/(nM))^j`.
pub fn w_to_u(w: &[f64], k: u64, n: u64, nodes: usize) -> Result<Vec<f64>> {
    let r = scale_ratio(k, n, nodes)?;
    let mut factor = 1.0;
    Ok(w.iter()
        .enumerate()
        .map(|(i, &wj)| {
            factor *= (i + 1) as f64 * r;
            wj * factor
        })
        .collect())
}

/// Inverse of [`w_to_u`].
pub fn u_to_w(u: &[f64], k: u64, n: u64, nodes: usize) -> Result<Vec<f64>> {
    let r = scale_ratio(k, n, nodes)?;
    let mut factor = 1.0;
    Ok(u.iter()
        .enumerate()
        .map(|(i, &uj)| {
            factor *= (i + 1) as f64 * r;
            uj / factor
        })
        .collect())
}

fn scale_ratio(k: u64, n: u64, nodes: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be >= 1"));
    }
    if nodes == 0 {
        return Err(Error::invalid("node count M must be >= 1"));
    }
    Ok(k as f64 / (n as f64 * nodes as f64))
}

/// Estimator weights bound to a particular `(k, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    pub poly: NodePolynomial,
    pub k: u64,
    pub n: u64,
    /// `u_1..u_L`; `u_j = 0` for `j > L`.
    pub u: Vec<f64>,
}

impl CoefficientVector {
    pub fn bind(poly: NodePolynomial, k: u64, n: u64) -> Result<Self> {
        let u = w_to_u(&poly.w, k, n, poly.nodes)?;
        Ok(CoefficientVector { poly, k, n, u })
    }

    /// All-zero weights: the estimator reduces to counting seen colors.
    pub fn naive(k: u64, n: u64) -> Self {
        CoefficientVector {
            poly: NodePolynomial {
                kind: Regime::L2,
                nodes: 1,
                degree: 0,
                w: Vec::new(),
                exact: Some(Vec::new()),
            },
            k,
            n,
            u: Vec::new(),
        }
    }

    pub fn kind(&self) -> Regime {
        self.poly.kind
    }

    pub fn degree(&self) -> usize {
        self.u.len()
    }

    pub fn nodes(&self) -> usize {
        self.poly.nodes
    }

    /// `u_j` for `j >= 1`, zero beyond the degree.
    pub fn u(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.u.get(j as usize - 1).copied().unwrap_or(0.0)
    }

    /// `φ(a) = Σ_j u_j (a·n/k)^j / j!`, which equals `p(a/M)` for matched `(k, n)`.
    pub fn phi(&self, a: f64, n: f64, k: f64) -> f64 {
        let x = a * n / k;
        let mut t = 1.0;
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (i, &uj) in self.u.iter().enumerate() {
            t *= x / (i + 1) as f64;
            // Neumaier summation: the terms alternate in sign and cancel heavily.
            let term = uj * t;
            let s = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - s) + term;
            } else {
                comp += (term - s) + sum;
            }
            sum = s;
        }
        sum + comp
    }

    /// Short hex digest of `(kind, M, L, k, n, u)`.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind().to_string().as_bytes());
        for v in [self.nodes() as u64, self.degree() as u64, self.k, self.n] {
            h.update(v.to_le_bytes());
        }
        for u in &self.u {
            h.update(u.to_bits().to_le_bytes());
        }
        let out = h.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use proptest::prelude::*;

    #[test]
    fn w_to_u_examples() {
        // k/n = 1, M = 2.
        let u = w_to_u(&[3.0, -2.0], 10, 10, 2).unwrap();
        assert_eq!(u, vec![1.5, -1.0]);
        assert_eq!(w_to_u(&[0.0, 0.0], 5, 7, 3).unwrap(), vec![0.0, 0.0]);
        assert!(w_to_u(&[1.0], 5, 0, 3).is_err());
    }

    #[test]
    fn node_polynomial_residuals() {
        // p(x) = 6/5 x on M = 2: residuals (-2/5, 1/5).
        let p = NodePolynomial::from_exact(Regime::L2, 2, vec![rational(6, 5)]);
        assert_eq!(
            p.node_deviations_exact().unwrap(),
            vec![rational(-2, 5), rational(1, 5)]
        );
        assert!((p.residual_l2() - (0.2f64).sqrt()).abs() < 1e-15);
        assert!((p.residual_l2_float() - (0.2f64).sqrt()).abs() < 1e-15);
        assert_eq!(p.max_node_error_exact().unwrap(), rational(2, 5));
    }

    #[test]
    fn phi_matches_node_polynomial() {
        // Interpolation through (1/2, 1), (1, 1): p(x) = 3x - 2x².
        let p = NodePolynomial::from_exact(Regime::Interpolation, 2, vec![int(3), int(-2)]);
        let c = CoefficientVector::bind(p, 10, 10).unwrap();
        assert_eq!(c.u, vec![1.5, -1.0]);
        for a in [1.0, 2.0] {
            assert!((c.phi(a, 10.0, 10.0) - 1.0).abs() < 1e-15);
        }
        assert_eq!(c.u(3), 0.0);
        assert_eq!(c.u(0), 0.0);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let p = NodePolynomial::from_exact(Regime::L2, 2, vec![rational(6, 5)]);
        let a = CoefficientVector::bind(p.clone(), 4, 2).unwrap();
        let b = CoefficientVector::bind(p.clone(), 4, 2).unwrap();
        let c = CoefficientVector::bind(p, 4, 3).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 16);
    }

    proptest! {
        #[test]
        fn u_w_round_trip(w in proptest::collection::vec(-1e6f64..1e6, 1..20), k in 2u64..100_000, n in 1u64..100_000, m in 1usize..200) {
            let u = w_to_u(&w, k, n, m).unwrap();
            let back = u_to_w(&u, k, n, m).unwrap();
            for (a, b) in w.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}
