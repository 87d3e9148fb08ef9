//! Small numerical kernels shared by the solvers.

use crate::error::{HenonError, Result};

/// `ln(1 + e^y)` without overflow.
pub fn softplus(y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        0.0
    } else if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// `e^y / (1 + e^y)`.
pub fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Surface area of the unit sphere in R^n, `2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let pi = std::f64::consts::PI;
    // Gamma(n/2) for integer n via the half-integer recursion.
    let mut gamma = if n % 2 == 0 { 1.0 } else { pi.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * pi.powf(n as f64 / 2.0) / gamma
}

/// Fornberg weights for the `order`-th derivative at `x0` from the nodes `xs`.
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Derivative of sampled data at every node with a five-point stencil
/// (shifted near the ends).
pub fn derivative_5pt(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 5 {
        return derivative_3pt(x, y);
    }
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let w = fd_weights(x[i], &x[start..start + 5], 1);
            w.iter().zip(&y[start..start + 5]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn derivative_3pt(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

/// Composite Simpson rule on uniformly spaced samples; falls back to the
/// 3/8 rule for the last three intervals when the interval count is odd.
pub fn simpson_uniform(h: f64, f: &[f64]) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (f[0] + f[1]),
        3 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals % 2 == 0 {
                (n - 1, 0.0)
            } else {
                let m = n - 4;
                (m, 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3]))
            };
            let mut s = f[0] + f[even_end];
            for (i, v) in f.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0 + tail
        }
    }
}

/// Trapezoid rule on arbitrary nodes.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

/// Solves a general tridiagonal system with partial pivoting.
/// `lower[i]` couples row i+1 to column i, `upper[i]` couples row i to column i+1.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Rows hold up to three entries: columns i, i+1, i+2 after pivoting.
    let mut d = diag.to_vec();
    let mut u1: Vec<f64> = upper.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut l: Vec<f64> = lower.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if l[i].abs() > d[i].abs() {
            // swap rows i and i+1
            let (nd, nu1, nu2) = (l[i], d[i + 1], u1[i + 1]);
            let (od, ou1, ou2) = (d[i], u1[i], 0.0);
            d[i] = nd;
            u1[i] = nu1;
            u2[i] = nu2;
            l[i] = od;
            d[i + 1] = ou1;
            u1[i + 1] = ou2;
            b.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            return Err(HenonError::Singular(i));
        }
        let m = l[i] / d[i];
        d[i + 1] -= m * u1[i];
        u1[i + 1] -= m * u2[i];
        b[i + 1] -= m * b[i];
    }
    if d[n - 1] == 0.0 {
        return Err(HenonError::Singular(n - 1));
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Ok(x)
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // Row-major storage of width kl + ku + 1 plus kl extra columns for pivot fill.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        // column j stored at offset j + kl - i within row i
        let off = j as isize + self.kl as isize - i as isize;
        if off < 0 || off as usize >= self.width() {
            None
        } else {
            Some(i * self.width() + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if j + self.kl < i || j > i + self.ku {
            assert!(v == 0.0, "entry ({i},{j}) outside the band");
            return;
        }
        let s = self.slot(i, j).expect("inside band");
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku_fill = self.ku + self.kl;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if best == 0.0 {
                return Err(HenonError::Singular(k));
            }
            let cmax = (k + ku_fill).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set_fill(k, j, b);
                    self.set_fill(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let m = self.get(i, k) / pivot;
                if m == 0.0 {
                    continue;
                }
                self.set_fill(i, k, m);
                for j in k + 1..=cmax {
                    let v = self.get(i, j) - m * self.get(k, j);
                    self.set_fill(i, j, v);
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }

    fn set_fill(&mut self, i: usize, j: usize, v: f64) {
        match self.slot(i, j) {
            Some(s) => self.data[s] = v,
            None => assert!(v == 0.0, "fill outside storage at ({i},{j})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let kl = self.lu.kl;
        let ku_fill = self.lu.ku + kl;
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                b[i] -= self.lu.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + ku_fill).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=cmax {
                s -= self.lu.get(k, j) * b[j];
            }
            b[k] = s / self.lu.get(k, k);
        }
        b
    }
}

/// Solves the bordered system `[A b; c^T d] [x; y] = [f; g]` by block
/// elimination with one step of iterative refinement.
pub fn solve_bordered(a: &BandMatrix, b: &[f64], c: &[f64], d: f64, f: &[f64], g: f64) -> Result<(Vec<f64>, f64)> {
    let lu = a.clone().factor()?;
    let solve = |f: &[f64], g: f64| -> Result<(Vec<f64>, f64)> {
        let z1 = lu.solve(f);
        let z2 = lu.solve(b);
        let denom = d - dot(c, &z2);
        if denom == 0.0 || !denom.is_finite() {
            return Err(HenonError::Singular(a.size()));
        }
        let y = (g - dot(c, &z1)) / denom;
        let x = z1.iter().zip(&z2).map(|(p, q)| p - y * q).collect();
        Ok((x, y))
    };
    let (mut x, mut y) = solve(f, g)?;
    let ax = a.matvec(&x);
    let rf: Vec<f64> = (0..f.len()).map(|i| f[i] - ax[i] - b[i] * y).collect();
    let rg = g - dot(c, &x) - d * y;
    let (dx, dy) = solve(&rf, rg)?;
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    y += dy;
    Ok((x, y))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Bisection on a function with `f(lo) > 0 > f(hi)` or the reverse.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok((lo, 0.0));
    }
    if fhi == 0.0 {
        return Ok((hi, 0.0));
    }
    if flo.signum() == fhi.signum() {
        return Err(HenonError::BracketFailed { samples: vec![(lo, flo), (hi, fhi)] });
    }
    let mut mid = 0.5 * (lo + hi);
    let mut fmid = f(mid)?;
    for _ in 0..max_iter {
        if fmid.abs() <= f_tol || (hi - lo).abs() <= x_tol {
            break;
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        fmid = f(mid)?;
    }
    Ok((mid, fmid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn softplus_is_stable_at_both_ends() {
        assert_relative_eq!(softplus(0.0), 2f64.ln());
        assert_relative_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert_relative_eq!(sphere_area(2), 2.0 * pi, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3), 4.0 * pi, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(4), 2.0 * pi * pi, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(5), 8.0 * pi * pi / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn fornberg_recovers_polynomial_derivatives() {
        let xs = [0.0, 0.3, 0.7, 1.2, 2.0];
        let w = fd_weights(0.5, &xs, 1);
        let d: f64 = xs.iter().zip(&w).map(|(x, c)| c * x.powi(4)).sum();
        assert_relative_eq!(d, 4.0 * 0.5f64.powi(3), epsilon = 1e-12);
        let w2 = fd_weights(0.5, &xs, 2);
        let d2: f64 = xs.iter().zip(&w2).map(|(x, c)| c * x.powi(3)).sum();
        assert_relative_eq!(d2, 3.0, epsilon = 1e-11);
    }

    #[test]
    fn simpson_handles_odd_interval_counts() {
        for n in [5usize, 6, 11, 12] {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert_relative_eq!(simpson_uniform(h, &f), 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn tridiagonal_matches_dense_solution() {
        let lower = [1.0, -2.0, 0.5];
        let diag = [1e-14, 3.0, 1.0, 5.0];
        let upper = [2.0, 1.0, 4.0];
        let x = [1.0, -1.0, 2.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i - 1] * x[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        let got = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in got.iter().zip(&x) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn band_lu_and_bordering() {
        let n = 9;
        let mut a = BandMatrix::zeros(n, 2, 1);
        for i in 0..n {
            a.set(i, i, if i % 3 == 0 { 1e-3 } else { 2.0 + i as f64 });
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
            }
            if i >= 1 {
                a.set(i, i - 1, 3.0);
            }
            if i >= 2 {
                a.set(i, i - 2, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.1).collect();
        let f = a.matvec(&x);
        let got = a.clone().factor().unwrap().solve(&f);
        for (p, q) in got.iter().zip(&x) {
            assert_relative_eq!(p, q, epsilon = 1e-10);
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let c: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let (d, y) = (0.7, -1.3);
        let ax = a.matvec(&x);
        let ff: Vec<f64> = (0..n).map(|i| ax[i] + b[i] * y).collect();
        let g = dot(&c, &x) + d * y;
        let (gx, gy) = solve_bordered(&a, &b, &c, d, &ff, g).unwrap();
        assert_relative_eq!(gy, y, epsilon = 1e-10);
        for (p, q) in gx.iter().zip(&x) {
            assert_relative_eq!(p, q, epsilon = 1e-10);
        }
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let x = [0.0, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 0.5).collect();
        let fit = fit_line(&x, &y);
        assert_relative_eq!(fit.slope, -2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.intercept, 0.5, epsilon = 1e-14);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
    }
}
