//! Grid Vandermonde matrices and their smallest singular values.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::orthopoly::ChebyshevBasis;

/// Row-major `M × cols` matrix with entries `(i/M)^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMatrix {
    pub nodes: usize,
    pub degree: usize,
    /// Whether column 0 is the all-ones column (`B̄`) or absent (`B`).
    pub with_ones: bool,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NodeMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn scaled(&self, s: f64) -> NodeMatrix {
        NodeMatrix {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `AᵀA`, row-major `cols × cols`.
    pub fn gram(&self) -> Vec<f64> {
        let c = self.cols;
        let mut g = vec![0.0; c * c];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..c {
                for j in i..c {
                    g[i * c + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..c {
            for j in 0..i {
                g[i * c + j] = g[j * c + i];
            }
        }
        g
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// `B` (`with_ones = false`, columns `x^1..x^L`) or `B̄` (columns `x^0..x^L`)
/// on the nodes `x = i/M`, `i = 1..=M`.
pub fn build_matrix(nodes: usize, degree: usize, with_ones: bool) -> Result<NodeMatrix> {
    if nodes == 0 || degree == 0 {
        return Err(Error::invalid(format!(
            "need M >= 1 and L >= 1, got M={nodes}, L={degree}"
        )));
    }
    let first = usize::from(!with_ones);
    let cols = degree + 1 - first;
    let mut data = Vec::with_capacity(nodes * cols);
    for i in 1..=nodes {
        let x = i as f64 / nodes as f64;
        for j in first..=degree {
            data.push(x.powi(j as i32));
        }
    }
    Ok(NodeMatrix {
        nodes,
        degree,
        with_ones,
        rows: nodes,
        cols,
        data,
    })
}

/// Convergence target for the off-diagonal Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric `n × n` matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn jacobi_eigenvalues(sym: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(sym.len(), n * n, "matrix is not {n}x{n}");
    let mut a = sym.to_vec();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Smallest singular value through the Gram matrix eigenvalues.
pub fn sigma_min(a: &NodeMatrix) -> Result<f64> {
    if a.rows() < a.cols() {
        return Err(Error::invalid(format!(
            "sigma_min needs rows >= columns, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let eig = jacobi_eigenvalues(&a.gram(), a.cols());
    Ok(eig[0].max(0.0).sqrt())
}

/// Lower bound `(1/(L²·2^{7L}·(2L+1)))·((M+L)/(eM))^{L+1/2}` on `σ_min(B̄/√M)`.
pub fn sigma_min_bound(nodes: usize, degree: usize) -> Result<f64> {
    if degree == 0 || nodes <= degree {
        return Err(Error::invalid(format!(
            "bound needs L >= 1 and M >= L + 1, got M={nodes}, L={degree}"
        )));
    }
    let (m, l) = (nodes as f64, degree as f64);
    let log = -2.0 * l.ln() - 7.0 * l * std::f64::consts::LN_2 - (2.0 * l + 1.0).ln()
        + (l + 0.5) * (((m + l) / m).ln() - 1.0);
    Ok(log.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRow {
    #[serde(rename = "M")]
    pub nodes: usize,
    #[serde(rename = "L")]
    pub degree: usize,
    /// `σ_min(B̄/√M)`
    pub sigma_min: f64,
    pub bound: f64,
    /// `sigma_min / bound`; at least 1 whenever the bound holds.
    pub ratio: f64,
    /// `σ_min(B/√M)`, reported for the `σ_min(B) >= σ_min(B̄)` comparison.
    pub sigma_min_b: f64,
}

pub fn spectral_row(nodes: usize, degree: usize) -> Result<SpectralRow> {
    let inv = 1.0 / (nodes as f64).sqrt();
    let sigma_bar = sigma_min(&build_matrix(nodes, degree, true)?.scaled(inv))?;
    let sigma_b = sigma_min(&build_matrix(nodes, degree, false)?.scaled(inv))?;
    let bound = sigma_min_bound(nodes, degree)?;
    Ok(SpectralRow {
        nodes,
        degree,
        sigma_min: sigma_bar,
        bound,
        ratio: sigma_bar / bound,
        sigma_min_b: sigma_b,
    })
}

/// Every `(M, L)` with `1 <= L <= max_degree`, `L+1 <= M <= max_nodes`.
pub fn spectral_scan(max_degree: usize, max_nodes: usize) -> Result<Vec<SpectralRow>> {
    let mut rows = Vec::new();
    for degree in 1..=max_degree {
        for nodes in degree + 1..=max_nodes {
            rows.push(spectral_row(nodes, degree)?);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusReport {
    #[serde(rename = "M")]
    pub nodes: usize,
    pub m: usize,
    pub points: usize,
    /// Largest `|t_m(z)| / bound(z)` seen.
    pub worst_ratio: f64,
    pub worst_z: (f64, f64),
    /// Points where the bound failed.
    pub violations: Vec<(f64, f64)>,
}

impl ModulusReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `m²·2^{6m}·sup_{0≤ξ≤m} (|z+ξ| ∨ M)^m`. `|z+ξ|` is convex in `ξ`, so the
/// supremum sits at an endpoint.
pub fn tm_modulus_bound(nodes: usize, m: usize, z: Complex64) -> f64 {
    let reach = z.norm().max((z + m as f64).norm()).max(nodes as f64);
    let mf = m as f64;
    mf * mf * 2f64.powi(6 * m as i32) * reach.powi(m as i32)
}

/// Checks `|t_m(z)| <= m²·2^{6m}·sup_ξ(|z+ξ| ∨ M)^m` at `num_points` points on
/// the unit circle and `num_points` points spread over `[−1, M]`.
pub fn tm_modulus_check(basis: &ChebyshevBasis, m: usize, num_points: usize) -> Result<ModulusReport> {
    if m > basis.degree() {
        return Err(Error::invalid(format!(
            "basis holds degrees up to {}, asked for {m}",
            basis.degree()
        )));
    }
    if num_points < 2 {
        return Err(Error::invalid("need at least two sample points"));
    }
    let nodes = basis.nodes();
    let coeffs = basis.t(m).to_f64();
    let eval = |z: Complex64| {
        coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    let circle = (0..num_points).map(|i| {
        Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / num_points as f64)
    });
    let span = nodes as f64 + 1.0;
    let line = (0..num_points)
        .map(|i| Complex64::new(-1.0 + span * i as f64 / (num_points - 1) as f64, 0.0));

    let mut report = ModulusReport {
        nodes,
        m,
        points: 2 * num_points,
        worst_ratio: 0.0,
        worst_z: (0.0, 0.0),
        violations: Vec::new(),
    };
    for z in circle.chain(line) {
        let ratio = eval(z).norm() / tm_modulus_bound(nodes, m, z);
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_z = (z.re, z.im);
        }
        if !(ratio <= 1.0) {
            report.violations.push((z.re, z.im));
        }
    }
    Ok(report)
}
