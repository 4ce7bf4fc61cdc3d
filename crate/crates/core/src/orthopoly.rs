//! Discrete Chebyshev (Gram) polynomials and the least-squares fit of the
//! constant function on the grid `{1/M, …, 1}`.
//!
//! `t_m` is orthogonal under the counting measure on `{0, …, M−1}` with
//! `Σ_x t_m(x)² = c(M, m) = M·Π_{j=1..m}(M² − j²)/(2m + 1)`. The rescaled
//! `φ_m(x) = t_m(Mx − 1)/√c(M, m)` is orthonormal on the grid. All coefficient
//! work is exact; values become `f64` only on the way out.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::coeffs::{NodePolynomial, Regime};
use crate::error::{Error, Result};
use crate::exact::{self, binomial, factorial, int, rational, RationalPoly};

#[derive(Clone, Debug)]
pub struct ChebyshevBasis {
    nodes: usize,
    degree: usize,
    polys: Vec<RationalPoly>,
    /// `m!·t_m`, integer coefficients.
    scaled: Vec<Vec<BigInt>>,
    norms: Vec<BigRational>,
}

impl ChebyshevBasis {
    /// Number of nodes `M`.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Largest degree `L` held.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `t_m` in the variable `x ∈ {0, …, M−1}`.
    pub fn t(&self, m: usize) -> &RationalPoly {
        &self.polys[m]
    }

    /// `c(M, m) = Σ_x t_m(x)²`.
    pub fn norm(&self, m: usize) -> &BigRational {
        &self.norms[m]
    }

    /// `φ_m(a/M)` for `a = 1..=M`. Each value is exact until the final division
    /// by `√c(M, m)`.
    pub fn phi_on_grid(&self, m: usize) -> Vec<f64> {
        let scale = exact::to_f64(&self.norms[m]).sqrt();
        let fact = BigInt::from(factorial(m as u64));
        (0..self.nodes as i64)
            .map(|x| {
                let x = BigInt::from(x);
                let v = self.scaled[m]
                    .iter()
                    .rev()
                    .fold(BigInt::zero(), |acc, c| acc * &x + c);
                exact::to_f64(&BigRational::new(v, fact.clone())) / scale
            })
            .collect()
    }

    /// Coefficients of `t_m(Mx − 1)` in `x`, exact.
    pub fn t_on_unit_grid(&self, m: usize) -> RationalPoly {
        self.polys[m].compose_affine(&int(self.nodes as i64), &int(-1))
    }
}

/// `p_m(x) = x(x−1)…(x−m+1)·(x−M)(x−M−1)…(x−M−m+1)`, integer coefficients.
fn p_m(nodes: usize, m: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::one()];
    for i in 0..m {
        for root in [i, nodes + i] {
            let root = BigInt::from(root);
            let mut next = vec![BigInt::zero(); p.len() + 1];
            for (d, c) in p.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * &root;
            }
            p = next;
        }
    }
    p
}

/// Coefficients of `x ↦ p(x + s)` (Taylor shift).
fn shift_int(p: &[BigInt], s: i64) -> Vec<BigInt> {
    let mut a = p.to_vec();
    let s = BigInt::from(s);
    let n = a.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i..n - 1).rev() {
            let carry = &a[j + 1] * &s;
            a[j] += carry;
        }
    }
    a
}

/// `m!·t_m` where `t_m = Δ^m p_m / m!`, expanded through
/// `Δ^m p(x) = Σ_j (−1)^j C(m, j) p(x + m − j)`.
fn t_m_scaled(nodes: usize, m: usize) -> Vec<BigInt> {
    let p = p_m(nodes, m);
    let mut acc = vec![BigInt::zero(); p.len()];
    for j in 0..=m {
        let c = BigInt::from(binomial(m as u64, j as u64));
        let c = if j % 2 == 1 { -c } else { c };
        for (a, v) in acc.iter_mut().zip(shift_int(&p, (m - j) as i64)) {
            *a += &c * v;
        }
    }
    while acc.len() > 1 && acc.last().is_some_and(Zero::is_zero) {
        acc.pop();
    }
    acc
}

/// Closed-form `c(M, m)`.
pub fn chebyshev_norm(nodes: usize, m: usize) -> BigRational {
    let mm = BigInt::from(nodes);
    let mut prod = mm.clone();
    for j in 1..=m {
        prod *= &mm * &mm - BigInt::from(j * j);
    }
    BigRational::new(prod, BigInt::from(2 * m + 1))
}

pub fn chebyshev_basis(nodes: usize, degree: usize) -> Result<ChebyshevBasis> {
    if nodes == 0 || degree >= nodes {
        return Err(Error::invalid(format!(
            "discrete Chebyshev basis needs L <= M - 1, got M={nodes}, L={degree}"
        )));
    }
    let scaled: Vec<Vec<BigInt>> = (0..=degree).map(|m| t_m_scaled(nodes, m)).collect();
    let polys = scaled
        .iter()
        .enumerate()
        .map(|(m, num)| {
            let fact = BigInt::from(factorial(m as u64));
            RationalPoly::new(num.iter().map(|c| BigRational::new(c.clone(), fact.clone())).collect())
        })
        .collect();
    let norms = (0..=degree).map(|m| chebyshev_norm(nodes, m)).collect();
    Ok(ChebyshevBasis {
        nodes,
        degree,
        polys,
        scaled,
        norms,
    })
}

/// `(2m+1)/M · Π_{j=1..m} (M+j)/(M−j)`, i.e. `φ_m(0)²`.
fn phi_zero_sq(nodes: usize, m: usize) -> BigRational {
    let mut q = rational((2 * m + 1) as i64, nodes as i64);
    for j in 1..=m {
        q *= rational((nodes + j) as i64, (nodes - j) as i64);
    }
    q
}

#[derive(Clone, Debug)]
pub struct PhiAtZero {
    /// `φ_0(0), …, φ_L(0)`.
    pub values: Vec<f64>,
    /// `‖φ(0)‖²`, exact.
    pub norm_sq: BigRational,
}

pub fn phi_at_zero(nodes: usize, degree: usize) -> Result<PhiAtZero> {
    if nodes == 0 || degree >= nodes {
        return Err(Error::invalid(format!(
            "need L <= M - 1, got M={nodes}, L={degree}"
        )));
    }
    let mut values = Vec::with_capacity(degree + 1);
    let mut norm_sq = BigRational::zero();
    for m in 0..=degree {
        let sq = phi_zero_sq(nodes, m);
        let mag = exact::to_f64(&sq).sqrt();
        values.push(if m % 2 == 1 { -mag } else { mag });
        norm_sq += sq;
    }
    Ok(PhiAtZero { values, norm_sq })
}

/// `C(M+L+1, L+1) / C(M, L+1)`, exact.
pub fn binomial_ratio(nodes: usize, degree: usize) -> BigRational {
    let (m, l) = (nodes as u64, degree as u64);
    BigRational::new(
        binomial(m + l + 1, l + 1).into(),
        binomial(m, l + 1).into(),
    )
}

/// `min_w ‖Bw − 1‖₂ = [C(M+L+1, L+1)/C(M, L+1) − 1]^{−1/2}`.
pub fn l2_min_value(nodes: usize, degree: usize) -> Result<f64> {
    if degree == 0 || nodes <= degree {
        return Err(Error::invalid(format!(
            "closed form needs L >= 1 and M >= L + 1, got M={nodes}, L={degree}"
        )));
    }
    let excess = binomial_ratio(nodes, degree) - BigRational::one();
    Ok(exact::to_f64(&excess).powf(-0.5))
}

/// Least-squares `w` for `min ‖Bw − 1‖₂`, via projection onto the orthonormal
/// basis: the optimal combination is `a* = −φ(0)/‖φ(0)‖²`. Since
/// `φ_m(0)·φ_m(x) = t_m(−1)·t_m(Mx−1)/c(M, m)`, the expansion stays rational.
pub fn solve_l2(nodes: usize, degree: usize) -> Result<NodePolynomial> {
    if degree == 0 || nodes <= degree {
        return Err(Error::invalid(format!(
            "least-squares fit needs 1 <= L <= M - 1, got M={nodes}, L={degree}"
        )));
    }
    let basis = chebyshev_basis(nodes, degree)?;
    let s = phi_at_zero(nodes, degree)?.norm_sq;
    let minus_one = int(-1);
    let mut q = RationalPoly::constant(BigRational::zero());
    for m in 0..=degree {
        let weight = -(basis.t(m).eval(&minus_one) / basis.norm(m)) / &s;
        q = q.add(&basis.t_on_unit_grid(m).scale(&weight));
    }
    // q(0) = −1 by construction; degrees 1..L are w.
    debug_assert_eq!(q.coeff(0), int(-1));
    let w = (1..=degree).map(|j| q.coeff(j)).collect();
    Ok(NodePolynomial::from_exact(Regime::L2, nodes, w))
}
