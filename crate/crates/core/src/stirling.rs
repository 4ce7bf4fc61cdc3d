//! Signed Stirling numbers of the first kind and the interpolating weights
//! they induce.
//!
//! `s(n, m)` is the coefficient of `x^m` in `x(x−1)…(x−n+1)`. The table is
//! exact up to [`MAX_EXACT_N`]; there is no approximate fallback because the
//! recurrence subtracts and would lose everything in log space.

use std::ops::Mul;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::coeffs::{u_to_w, CoefficientVector, NodePolynomial, Regime};
use crate::error::{Error, Result};
use crate::exact::{factorial, ln_abs, ln_biguint};

pub const MAX_EXACT_N: usize = 128;

/// Coefficients with `log_abs` above this stay in log form.
pub const LOG_OVERFLOW_LIMIT: f64 = 700.0;

#[derive(Clone, Debug)]
pub struct StirlingTable {
    rows: Vec<Vec<BigInt>>,
}

impl StirlingTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigInt::from(1)]);
        for n in 0..max_n {
            let prev = &rows[n];
            let mut next = vec![BigInt::zero(); n + 2];
            // s(n+1, m) = s(n, m−1) − n·s(n, m)
            for m in 1..=n + 1 {
                let carry = &prev[m - 1];
                next[m] = match prev.get(m) {
                    Some(same) => carry - same * BigInt::from(n),
                    None => carry.clone(),
                };
            }
            rows.push(next);
        }
        StirlingTable { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `s(n, m)`; zero when `m > n`. Panics past `max_n`.
    pub fn get(&self, n: usize, m: usize) -> BigInt {
        if m > n {
            return BigInt::zero();
        }
        self.rows[n][m].clone()
    }

    pub fn row(&self, n: usize) -> &[BigInt] {
        &self.rows[n]
    }
}

fn table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(MAX_EXACT_N))
}

/// Signed `s(n, m)`; zero when `m > n`.
pub fn stirling_first(n: usize, m: usize) -> Result<BigInt> {
    if n > MAX_EXACT_N {
        return Err(Error::invalid(format!(
            "exact Stirling numbers are tabulated up to n = {MAX_EXACT_N}, got {n}"
        )));
    }
    Ok(table().get(n, m))
}

/// A real number carried as sign and natural log of its magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogMagnitude {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            return Self::ZERO;
        }
        LogMagnitude {
            sign: if v < 0.0 { -1 } else { 1 },
            log_abs: v.abs().ln(),
        }
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        match v.sign() {
            Sign::NoSign => Self::ZERO,
            Sign::Minus => LogMagnitude {
                sign: -1,
                log_abs: ln_abs(v),
            },
            Sign::Plus => LogMagnitude {
                sign: 1,
                log_abs: ln_abs(v),
            },
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogMagnitude {
            sign: self.sign,
            log_abs: -self.log_abs,
        }
    }

    pub fn fits_f64(self) -> bool {
        self.sign == 0 || self.log_abs <= LOG_OVERFLOW_LIMIT
    }

    /// `None` once the magnitude passes [`LOG_OVERFLOW_LIMIT`].
    pub fn to_f64(self) -> Option<f64> {
        if self.sign == 0 {
            return Some(0.0);
        }
        self.fits_f64()
            .then(|| f64::from(self.sign) * self.log_abs.exp())
    }
}

impl Mul for LogMagnitude {
    type Output = LogMagnitude;

    fn mul(self, rhs: LogMagnitude) -> LogMagnitude {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogMagnitude {
            sign: self.sign * rhs.sign,
            log_abs: self.log_abs + rhs.log_abs,
        }
    }
}

fn check_interp_args(nodes: usize, n: u64) -> Result<()> {
    if nodes == 0 {
        return Err(Error::invalid("interpolation needs M >= 1"));
    }
    if n == 0 {
        return Err(Error::invalid("sample size n must be >= 1"));
    }
    if nodes + 1 > MAX_EXACT_N {
        return Err(Error::invalid(format!(
            "interpolation with M = {nodes} needs s(M+1, ·) beyond the exact table (M <= {})",
            MAX_EXACT_N - 1
        )));
    }
    Ok(())
}

/// `u_j = (−1)^{M+1} (j!/M!) (k/n)^j s(M+1, j+1)` for `j = 1..=M`, in log form.
pub fn interp_log_coeffs(nodes: usize, k: u64, n: u64) -> Result<Vec<LogMagnitude>> {
    check_interp_args(nodes, n)?;
    let log_ratio = (k as f64 / n as f64).ln();
    let log_m_fact = ln_biguint(&factorial(nodes as u64));
    let outer_sign: i8 = if (nodes + 1) % 2 == 0 { 1 } else { -1 };
    Ok((1..=nodes)
        .map(|j| {
            let s = LogMagnitude::from_bigint(&table().get(nodes + 1, j + 1));
            let scale = LogMagnitude {
                sign: outer_sign,
                log_abs: ln_biguint(&factorial(j as u64)) - log_m_fact + j as f64 * log_ratio,
            };
            scale * s
        })
        .collect())
}

/// Exact `w_j = (−1)^{M+1} M^j s(M+1, j+1) / M!`.
pub fn interp_exact_w(nodes: usize) -> Result<Vec<BigRational>> {
    check_interp_args(nodes, 1)?;
    let m_fact: BigInt = factorial(nodes as u64).into();
    let sign = if (nodes + 1) % 2 == 0 { 1 } else { -1 };
    Ok((1..=nodes)
        .map(|j| {
            let num = table().get(nodes + 1, j + 1)
                * BigInt::from(nodes).pow(j as u32)
                * BigInt::from(sign);
            BigRational::new(num, m_fact.clone())
        })
        .collect())
}

/// Interpolating weights with `L = M`. `u` comes from the log-form formula;
/// `w` is recovered from it through the inverse substitution, and the exact
/// `w` is attached for rational checks.
pub fn interp_coeffs(nodes: usize, k: u64, n: u64) -> Result<CoefficientVector> {
    let logs = interp_log_coeffs(nodes, k, n)?;
    let mut u = Vec::with_capacity(nodes);
    for (i, lm) in logs.iter().enumerate() {
        match lm.to_f64() {
            Some(v) => u.push(v),
            None => {
                return Err(Error::CoefficientOverflow {
                    index: i + 1,
                    log_abs: lm.log_abs,
                })
            }
        }
    }
    let w = u_to_w(&u, k, n, nodes)?;
    let poly = NodePolynomial {
        kind: Regime::Interpolation,
        nodes,
        degree: nodes,
        w,
        exact: Some(interp_exact_w(nodes)?),
    };
    Ok(CoefficientVector { poly, k, n, u })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StirlingBoundRow {
    pub n: usize,
    pub m: usize,
    /// `|s(n+1, m+1)| / n!`
    pub abs_s_over_nfact: f64,
    /// `(|s(n+1, m+1)|/n!)^{1/m} · m / (1 ∨ ln(n/m))`
    pub c: f64,
}

/// Empirical constant behind `|s(n+1, m+1)| = n!·(Θ((1/m)(1 ∨ log(n/m))))^m`.
pub fn stirling_bound_report(n: usize, m: usize) -> Result<StirlingBoundRow> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("need 1 <= m <= n, got n={n}, m={m}")));
    }
    let s = stirling_first(n + 1, m + 1)?;
    let log_ratio = ln_abs(&s) - ln_biguint(&factorial(n as u64));
    let denom = (n as f64 / m as f64).ln().max(1.0);
    Ok(StirlingBoundRow {
        n,
        m,
        abs_s_over_nfact: log_ratio.exp(),
        c: (log_ratio / m as f64).exp() * m as f64 / denom,
    })
}

/// All rows `1 <= m <= n <= max_n`.
pub fn stirling_bound_table(max_n: usize) -> Result<Vec<StirlingBoundRow>> {
    let mut rows = Vec::new();
    for n in 1..=max_n {
        for m in 1..=n {
            rows.push(stirling_bound_report(n, m)?);
        }
    }
    Ok(rows)
}

/// `Σ_m |s(n, m)|`, which must equal `n!`.
pub fn unsigned_row_sum(n: usize) -> Result<BigInt> {
    stirling_first(n, 0)?;
    Ok(table().row(n).iter().map(|v| v.abs()).sum())
}

/// Exact `p(a/M) − 1` for the interpolating weights, `a = 1..=M`.
pub fn interp_node_deviations(nodes: usize) -> Result<Vec<BigRational>> {
    let poly = NodePolynomial::from_exact(Regime::Interpolation, nodes, interp_exact_w(nodes)?);
    Ok(poly.node_deviations_exact().expect("exact weights"))
}

pub(crate) fn rational_is_zero(v: &[BigRational]) -> bool {
    v.iter().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, RationalPoly};

    fn s(n: usize, m: usize) -> i64 {
        i64::try_from(stirling_first(n, m).unwrap()).unwrap()
    }

    #[test]
    fn small_values() {
        assert_eq!((s(3, 1), s(3, 2), s(3, 3)), (2, -3, 1));
        assert_eq!((s(4, 1), s(4, 2), s(4, 3), s(4, 4)), (-6, 11, -6, 1));
        assert_eq!(s(0, 0), 1);
        assert_eq!(s(5, 0), 0);
        assert_eq!(s(3, 7), 0);
        for n in 0..=50 {
            assert_eq!(s(n, n), 1);
        }
        assert!(stirling_first(MAX_EXACT_N + 1, 1).is_err());
    }

    #[test]
    fn signs_alternate() {
        for n in 1..=60 {
            for m in 1..=n {
                let v = stirling_first(n, m).unwrap();
                let expect = if (n - m) % 2 == 0 { Sign::Plus } else { Sign::Minus };
                assert_eq!(v.sign(), expect, "s({n},{m})");
            }
        }
    }

    #[test]
    fn table_matches_falling_factorial_expansion() {
        for n in 0..=12usize {
            let poly = (0..n as i64).fold(RationalPoly::constant(int(1)), |acc, i| {
                acc.mul(&RationalPoly::linear_root(int(i)))
            });
            for m in 0..=n {
                assert_eq!(poly.coeff(m), BigRational::from_integer(stirling_first(n, m).unwrap()));
            }
        }
    }

    #[test]
    fn unsigned_rows_sum_to_factorial() {
        for n in 0..=50 {
            assert_eq!(unsigned_row_sum(n).unwrap(), BigInt::from(factorial(n as u64)));
        }
    }

    #[test]
    fn log_magnitude_arithmetic() {
        let a = LogMagnitude::from_f64(-3.0);
        let b = LogMagnitude::from_f64(0.5);
        let c = a * b;
        assert_eq!(c.sign, -1);
        assert!((c.to_f64().unwrap() + 1.5).abs() < 1e-15);
        assert_eq!((a * LogMagnitude::ZERO).to_f64(), Some(0.0));
        assert!((a.recip().to_f64().unwrap() + 1.0 / 3.0).abs() < 1e-15);
        let huge = LogMagnitude { sign: 1, log_abs: 701.0 };
        assert_eq!(huge.to_f64(), None);
        let big = LogMagnitude::from_bigint(&(BigInt::from(10).pow(400) * -1));
        assert_eq!(big.sign, -1);
        assert!((big.log_abs - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn interp_two_nodes() {
        let c = interp_coeffs(2, 7, 7).unwrap();
        assert!((c.u[0] - 1.5).abs() < 1e-14 && (c.u[1] + 1.0).abs() < 1e-14, "{:?}", c.u);
        assert!((c.poly.w[0] - 3.0).abs() < 1e-13 && (c.poly.w[1] + 2.0).abs() < 1e-13);
        assert_eq!(c.poly.exact.as_ref().unwrap(), &vec![int(3), int(-2)]);
        for x in [0.5, 1.0] {
            assert!((c.poly.eval(x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interp_one_node_doubles_singletons() {
        let c = interp_coeffs(1, 9, 9).unwrap();
        assert!((c.u[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interp_signs_alternate() {
        for nodes in 1..=40 {
            for (i, lm) in interp_log_coeffs(nodes, 3, 5).unwrap().iter().enumerate() {
                let j = i + 1;
                assert_eq!(lm.sign, if j % 2 == 1 { 1 } else { -1 }, "M={nodes} j={j}");
            }
        }
    }

    #[test]
    fn interp_log_form_matches_exact_w() {
        for nodes in 1..=30 {
            for (k, n) in [(1u64, 4u64), (1, 2), (3, 3), (2, 1)] {
                let c = interp_coeffs(nodes, k, n).unwrap();
                let exact_w = c.poly.exact.as_ref().unwrap();
                for (wf, we) in c.poly.w.iter().zip(exact_w) {
                    let we = crate::exact::to_f64(we);
                    assert!((wf - we).abs() <= 1e-12 * we.abs(), "M={nodes}: {wf} vs {we}");
                }
            }
        }
    }

    #[test]
    fn interpolation_is_exact_in_rationals() {
        for nodes in 1..=30 {
            assert!(rational_is_zero(&interp_node_deviations(nodes).unwrap()), "M={nodes}");
        }
    }

    #[test]
    fn overflow_is_reported_not_infinite() {
        // k/n = 10^6 with M = 100 pushes (k/n)^j far past f64.
        let err = interp_coeffs(100, 1_000_000, 1).unwrap_err();
        assert!(matches!(err, Error::CoefficientOverflow { .. }), "{err}");
        let logs = interp_log_coeffs(100, 1_000_000, 1).unwrap();
        assert!(logs.iter().any(|l| !l.fits_f64()));
        assert!(interp_coeffs(MAX_EXACT_N, 1, 1).is_err());
    }

    #[test]
    fn bound_report_examples() {
        let r = stirling_bound_report(2, 2).unwrap();
        assert!((r.abs_s_over_nfact - 0.5).abs() < 1e-15);
        assert!((r.c - 2f64.sqrt()).abs() < 1e-14);
        let r = stirling_bound_report(2, 1).unwrap();
        assert!((r.abs_s_over_nfact - 1.5).abs() < 1e-15);
        assert!((r.c - 1.5).abs() < 1e-14);
        assert!(stirling_bound_report(2, 3).is_err());
        assert!(stirling_bound_report(2, 0).is_err());
    }

    fn max_float_node_error(max_nodes: usize) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for nodes in 1..=max_nodes {
            for (k, n) in [(100, 400), (100, 200), (100, 100), (200, 100)] {
                let err = interp_coeffs(nodes, k, n).unwrap().poly.max_node_error_float();
                if err > worst.1 {
                    worst = (nodes, err);
                }
            }
        }
        worst
    }

    #[test]
    fn interpolation_nodes_in_floating_point() {
        let (nodes, err) = max_float_node_error(16);
        assert!(err <= 1e-6, "M={nodes}: {err:e}");
    }

    // Σ|w_j| grows like binom(2M, M), so rounding w to f64 alone moves p(1)
    // by about 1e-16·binom(2M, M): roughly 10 at M = 30.
    #[test]
    #[ignore = "f64 coefficients cannot reach 1e-6 at the nodes beyond M = 16"]
    fn interpolation_nodes_in_floating_point_to_thirty() {
        let (nodes, err) = max_float_node_error(30);
        assert!(err <= 1e-6, "M={nodes}: {err:e}");
    }
}
