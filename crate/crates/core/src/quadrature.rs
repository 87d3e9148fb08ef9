//! Gauss quadrature on `[-1, 1]` and orthonormal Jacobi polynomials.

use serde::{Deserialize, Serialize};

/// Three-term recurrence coefficients `(alpha_n, beta_n)` of the monic Jacobi
/// polynomials for the weight `(1-x)^a (1+x)^b`; `beta_0` is unused.
fn jacobi_recurrence(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut al = Vec::with_capacity(n);
    let mut be = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let alpha = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        let beta = match k {
            0 => 0.0,
            1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b)),
            _ => 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0)),
        };
        al.push(alpha);
        be.push(beta);
    }
    (al, be)
}

/// Orthonormal Jacobi polynomials with respect to the probability measure
/// proportional to `(1-x)^a (1+x)^b` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiFamily {
    pub a: f64,
    pub b: f64,
    alpha: Vec<f64>,
    sqrt_beta: Vec<f64>,
}

impl JacobiFamily {
    pub fn new(a: f64, b: f64, max_degree: usize) -> Self {
        let (alpha, beta) = jacobi_recurrence(a, b, max_degree + 2);
        Self { a, b, alpha, sqrt_beta: beta.iter().map(|v| v.sqrt()).collect() }
    }

    pub fn max_degree(&self) -> usize {
        self.alpha.len() - 2
    }

    /// Values `p_0(x) .. p_n(x)`.
    pub fn values(&self, n: usize, x: f64) -> Vec<f64> {
        self.values_and_derivatives(n, x).0
    }

    /// Values and first derivatives `p_0 .. p_n` at `x`.
    pub fn values_and_derivatives(&self, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        assert!(n <= self.max_degree(), "degree {n} beyond the prepared recurrence");
        let mut p = vec![0.0; n + 1];
        let mut dp = vec![0.0; n + 1];
        p[0] = 1.0;
        for k in 0..n {
            let prev = if k > 0 { self.sqrt_beta[k] * p[k - 1] } else { 0.0 };
            let dprev = if k > 0 { self.sqrt_beta[k] * dp[k - 1] } else { 0.0 };
            p[k + 1] = ((x - self.alpha[k]) * p[k] - prev) / self.sqrt_beta[k + 1];
            dp[k + 1] = (p[k] + (x - self.alpha[k]) * dp[k] - dprev) / self.sqrt_beta[k + 1];
        }
        (p, dp)
    }
}

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.nodes.len() - 1
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e` (`e[i]` couples `i` and `i+1`).
pub fn tridiagonal_count_below(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..d.len() {
        let off = if i > 0 { e[i - 1] * e[i - 1] / q } else { 0.0 };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs() + 1e-300);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by Sturm bisection.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if tridiagonal_count_below(d, e, m) > k {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Gauss rule for the probability measure proportional to `(1-x)^a (1+x)^b`.
/// Nodes from the Jacobi matrix, weights from the Christoffel function.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    let fam = JacobiFamily::new(a, b, n);
    let (al, be) = jacobi_recurrence(a, b, n);
    let off: Vec<f64> = be[1..].iter().map(|v| v.sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(&al, &off);
    for x in nodes.iter_mut() {
        // polish on p_n
        for _ in 0..2 {
            let (p, dp) = fam.values_and_derivatives(n, *x);
            if dp[n] != 0.0 {
                let step = p[n] / dp[n];
                if step.abs() < 1e-8 {
                    *x -= step;
                }
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = fam.values(n - 1, x);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    GaussRule { nodes, weights }
}

/// Gauss-Legendre rule for plain `dx` on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(n: usize) -> GaussRule {
    let mut rule = gauss_jacobi(n, 0.0, 0.0);
    for w in &mut rule.weights {
        *w *= 2.0;
    }
    rule
}
