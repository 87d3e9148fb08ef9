//! Singular weighted Sturm-Liouville problems built from the bubble.
//!
//! Everything is posed in the logarithmic variable `t = ln r`. With
//! `G = r^{N-2}|U'|^{p-2}` the problems read
//!
//! `-((p-1) G w')' + G V w = mu G Omega w`
//!
//! where `(V, Omega) = (-K, 1)` for the angular kind (the eigenvalue is compared
//! with `-lambda_k`) and `(V, Omega) = (lambda_k, K)` for the source kind (the
//! eigenvalue is compared with `1`). `K = r^2 (p*-1) r^alpha U^{p*-2} / |U'|^{p-2}`
//! has the closed form `kappa sigma (1 - sigma)` with `sigma` logistic in `a t`.

use serde::{Deserialize, Serialize};

use crate::core_model::{ParamFamily, ProblemParams};
use crate::error::{HenonError, Result};
use crate::harmonics::lambda_k;
use crate::numerics::{logistic, simpson_uniform, softplus, solve_tridiagonal, trapezoid};
use crate::profile::RadialFunction;
use crate::quadrature::tridiagonal_count_below;

pub const DEFAULT_R_MIN: f64 = 1e-6;
pub const DEFAULT_LOG_STEP: f64 = 0.01;
pub const DEFAULT_R_INF: f64 = 1e3;

/// The bubble `U_{1,alpha}` in a possibly non-integer dimension, seen through the
/// coefficients of its linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedProfile {
    pub dim: f64,
    pub p: f64,
    pub alpha: f64,
}

impl LinearizedProfile {
    pub fn new(dim: f64, p: f64, alpha: f64) -> Result<Self> {
        if !(p > 1.0 && dim > p && alpha >= 0.0 && dim.is_finite() && alpha.is_finite()) {
            return Err(HenonError::InvalidParams(format!(
                "linearized profile needs 1 < p < dim and alpha >= 0 (dim={dim}, p={p}, alpha={alpha})"
            )));
        }
        Ok(Self { dim, p, alpha })
    }

    pub fn from_params(params: &ProblemParams) -> Self {
        Self { dim: params.dim(), p: params.p, alpha: params.alpha }
    }

    pub fn a(&self) -> f64 {
        (self.p + self.alpha) / (self.p - 1.0)
    }

    pub fn e(&self) -> f64 {
        (self.dim + self.alpha) / (self.p + self.alpha)
    }

    pub fn critical_exponent(&self) -> f64 {
        self.p * (self.dim + self.alpha) / (self.dim - self.p)
    }

    fn ln_c(&self) -> f64 {
        let (n, p, al) = (self.dim, self.p, self.alpha);
        ((n + al).ln() + (p - 1.0) * ((n - p) / (p - 1.0)).ln()) * (n - p) / (p * (p + al))
    }

    /// `ln U(e^t)`.
    pub fn ln_u(&self, t: f64) -> f64 {
        let b = (self.dim - self.p) / (self.p + self.alpha);
        self.ln_c() - b * softplus(self.a() * t)
    }

    /// `ln |U'(e^t)|`.
    pub fn ln_abs_du(&self, t: f64) -> f64 {
        let a = self.a();
        self.ln_c() + ((self.dim - self.p) / (self.p - 1.0)).ln() + (a - 1.0) * t - self.e() * softplus(a * t)
    }

    /// `ln G(t)`.
    pub fn ln_g(&self, t: f64) -> f64 {
        (self.dim - 2.0) * t + (self.p - 2.0) * self.ln_abs_du(t)
    }

    /// `d ln G / dt`.
    pub fn g(&self, t: f64) -> f64 {
        let a = self.a();
        (self.dim - 2.0) + (self.p - 2.0) * ((a - 1.0) - self.e() * a * logistic(a * t))
    }

    pub fn g_left(&self) -> f64 {
        (self.dim - 2.0) + (self.p - 2.0) * (self.a() - 1.0)
    }

    pub fn g_right(&self) -> f64 {
        (self.dim - self.p) / (self.p - 1.0)
    }

    pub fn kappa(&self) -> f64 {
        let (n, p, al) = (self.dim, self.p, self.alpha);
        (n + al) * (n * p + p * al - n + p) / (p - 1.0)
    }

    /// `K(t) = kappa sigma (1 - sigma)`.
    pub fn k_pot(&self, t: f64) -> f64 {
        let s = logistic(self.a() * t);
        let sc = logistic(-self.a() * t);
        self.kappa() * s * sc
    }
}

/// Which term carries the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectralKind {
    /// `-((p-1)Gw')' - G K w = mu G w`; mode `k` is degenerate when `mu = -lambda_k`.
    Angular,
    /// `-((p-1)Gw')' + lambda G w = mu G K w`; mode is degenerate when `mu = 1`.
    Source { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeftBc {
    /// Select the larger Frobenius root (`w -> 0` at the origin for positive roots).
    Vanishing,
    /// Select the root continuous through zero (bounded, flat solutions).
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RightBc {
    Dirichlet,
    /// Robin condition `w'/w = m/r` with `m` the decaying tail exponent.
    DecayMatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Ball { eps: f64 },
    WholeLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlProblem {
    pub profile: LinearizedProfile,
    pub kind: SpectralKind,
    pub k: u32,
    pub left: LeftBc,
    pub right: RightBc,
    pub r_min: f64,
    pub r_max: f64,
    pub log_step: f64,
    /// Cross-check every eigenvalue with Pruefer shooting.
    pub verify: bool,
}

impl SlProblem {
    pub fn new(profile: LinearizedProfile, kind: SpectralKind, left: LeftBc, right: RightBc, r_max: f64) -> Self {
        Self { profile, kind, k: 0, left, right, r_min: DEFAULT_R_MIN, r_max, log_step: DEFAULT_LOG_STEP, verify: true }
    }

    pub fn with_log_step(mut self, h: f64) -> Self {
        self.log_step = h;
        self
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    pub fn t_left(&self) -> f64 {
        self.r_min.ln()
    }

    pub fn t_right(&self) -> f64 {
        self.r_max.ln()
    }

    /// `a(r) = (p-1) r^{N-1} |U'|^{p-2}`.
    pub fn diffusion(&self, r: f64) -> f64 {
        (self.profile.p - 1.0) * (self.profile.ln_g(r.ln()) + r.ln()).exp()
    }

    /// `b(r) = r^{N-3} |U'|^{p-2}`.
    pub fn potential_weight(&self, r: f64) -> f64 {
        (self.profile.ln_g(r.ln()) - r.ln()).exp()
    }

    /// `c(r) = (p*-1) r^{N-1+alpha} U^{p*-2}`, assembled as `K(r) b(r)`.
    pub fn source_weight(&self, r: f64) -> f64 {
        self.profile.k_pot(r.ln()) * self.potential_weight(r)
    }

    fn v_omega(&self, t: f64) -> (f64, f64) {
        match self.kind {
            SpectralKind::Angular => (-self.profile.k_pot(t), 1.0),
            SpectralKind::Source { lambda } => (lambda, self.profile.k_pot(t)),
        }
    }

    fn c_coef(&self, t: f64, mu: f64) -> f64 {
        let (v, om) = self.v_omega(t);
        (v - mu * om) / (self.profile.p - 1.0)
    }

    /// Roots of `m^2 + g m - c = 0`.
    fn quadratic_roots(g: f64, c: f64) -> (f64, f64) {
        let disc = g * g + 4.0 * c;
        if disc <= 0.0 {
            return (-0.5 * g, -0.5 * g);
        }
        let s = disc.sqrt();
        let q = -0.5 * (g + if g >= 0.0 { s } else { -s });
        let (r1, r2) = if q != 0.0 { (q, -c / q) } else { (0.5 * s, -0.5 * s) };
        (r1.min(r2), r1.max(r2))
    }

    /// Limits of `c(t)` and the coefficient of its first exponential correction,
    /// `c ~ c_inf + c_1 e^{-a|t|}`, at either end.
    fn c_expansion(&self, mu: f64) -> (f64, f64, f64) {
        let pm1 = self.profile.p - 1.0;
        let kappa = self.profile.kappa();
        match self.kind {
            SpectralKind::Angular => (-mu / pm1, -mu / pm1, -kappa / pm1),
            SpectralKind::Source { lambda } => (lambda / pm1, lambda / pm1, -mu * kappa / pm1),
        }
    }

    /// Frobenius exponent at the origin: the finite-energy (larger) root of the
    /// indicial equation. For `LeftBc::Regular` with `g_0 >= 0` this is also the
    /// root continuous through zero.
    pub fn origin_exponent(&self, mu: f64) -> f64 {
        let (c0, _, _) = self.c_expansion(mu);
        Self::quadratic_roots(self.profile.g_left(), c0).1
    }

    /// Decaying exponent at infinity.
    pub fn tail_exponent(&self, mu: f64) -> f64 {
        let (_, cinf, _) = self.c_expansion(mu);
        Self::quadratic_roots(self.profile.g_right(), cinf).0
    }

    /// One-term correction `d` of `w ~ e^{m t}(1 + d e^{s t})` for frozen limits
    /// `(g, c)` and first-order coefficients `(g1, c1)`, with `s = +-a`.
    fn correction(m: f64, s: f64, g: f64, c: f64, g1: f64, c1: f64) -> f64 {
        let den = (m + s).powi(2) + g * (m + s) - c;
        if den.abs() < 1e-8 {
            0.0
        } else {
            (c1 - g1 * m) / den
        }
    }

    /// Logarithmic derivative `w_t / w` imposed at the left end.
    pub fn left_exponent(&self, mu: f64) -> f64 {
        let a = self.profile.a();
        let (c0, _, c1) = self.c_expansion(mu);
        let g0 = self.profile.g_left();
        let g1 = -(self.profile.p - 2.0) * self.profile.e() * a;
        let rho = self.origin_exponent(mu);
        let z = (a * self.t_left()).exp();
        rho + a * Self::correction(rho, a, g0, c0, g1, c1) * z
    }

    /// Logarithmic derivative `w_t / w` imposed at the right end (decay-matched case).
    pub fn right_exponent(&self, mu: f64) -> f64 {
        let a = self.profile.a();
        let (_, cinf, c1) = self.c_expansion(mu);
        let ginf = self.profile.g_right();
        let g1 = (self.profile.p - 2.0) * self.profile.e() * a;
        let m = self.tail_exponent(mu);
        let z = (-a * self.t_right()).exp();
        m - a * Self::correction(m, -a, ginf, cinf, g1, c1) * z
    }

    fn cells(&self, refine: u32) -> (usize, f64) {
        let len = self.t_right() - self.t_left();
        let n = ((len / self.log_step).ceil() as usize).max(8) << refine;
        (n, len / n as f64)
    }

    fn discretize(&self, refine: u32) -> Discrete {
        let (n, h) = self.cells(refine);
        let t0 = self.t_left();
        let pm1 = self.profile.p - 1.0;
        let t: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * h).collect();
        let ln_g: Vec<f64> = t.iter().map(|&ti| self.profile.ln_g(ti)).collect();
        let ln_g_half: Vec<f64> = (0..n).map(|i| self.profile.ln_g(t0 + (i as f64 + 0.5) * h)).collect();
        let keep = match self.right {
            RightBc::Dirichlet => n,
            RightBc::DecayMatched => n + 1,
        };
        let mut base = vec![0.0; keep];
        let mut omega = vec![0.0; keep];
        let mut off = vec![0.0; keep.saturating_sub(1)];
        for i in 0..keep {
            let wi = if i == 0 || i == n { 0.5 * h } else { h };
            let mut d = 0.0;
            if i > 0 {
                d += pm1 * (ln_g_half[i - 1] - ln_g[i]).exp() / h;
            }
            if i < n {
                d += pm1 * (ln_g_half[i] - ln_g[i]).exp() / h;
            }
            let (v, om) = self.v_omega(t[i]);
            base[i] = d + v * wi;
            omega[i] = om * wi;
            if i + 1 < keep {
                off[i] = -pm1 * (ln_g_half[i] - 0.5 * (ln_g[i] + ln_g[i + 1])).exp() / h;
            }
        }
        Discrete { h, t: t[..keep].to_vec(), ln_g: ln_g[..keep].to_vec(), base, omega, off, robin_right: keep == n + 1 }
    }

    fn matrix(&self, disc: &Discrete, mu: f64) -> Vec<f64> {
        let pm1 = self.profile.p - 1.0;
        let mut diag: Vec<f64> = disc.base.iter().zip(&disc.omega).map(|(b, o)| b - mu * o).collect();
        diag[0] += pm1 * self.left_exponent(mu);
        if disc.robin_right {
            let last = diag.len() - 1;
            diag[last] -= pm1 * self.right_exponent(mu);
        }
        diag
    }

    /// Number of discrete eigenvalues below `mu` on the given refinement level.
    fn count_below(&self, disc: &Discrete, mu: f64) -> usize {
        let diag = self.matrix(disc, mu);
        tridiagonal_count_below(&diag, &disc.off, 0.0)
    }

    fn eigenvalue_on(&self, disc: &Discrete, index: usize) -> Result<f64> {
        let mut lo = -1.0f64;
        let mut hi = 1.0f64;
        let mut tries = 0;
        while self.count_below(disc, lo) >= index {
            lo = 2.0 * lo - 1.0;
            tries += 1;
            if tries > 200 {
                return Err(HenonError::NoConvergence(format!("no lower bracket for eigenvalue {index}")));
            }
        }
        while self.count_below(disc, hi) < index {
            hi = 2.0 * hi + 1.0;
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return Err(HenonError::NoConvergence(format!("no upper bracket for eigenvalue {index}")));
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * (lo.abs() + hi.abs()) {
                break;
            }
            if self.count_below(disc, mid) >= index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn eigenvector_on(&self, disc: &Discrete, mu: f64) -> Result<(Vec<f64>, f64)> {
        let diag = self.matrix(disc, mu);
        let n = diag.len();
        let mut y = vec![1.0; n];
        for _ in 0..4 {
            let z = match solve_tridiagonal(&disc.off, &diag, &disc.off, &y) {
                Ok(z) => z,
                Err(_) => {
                    let shifted: Vec<f64> = diag.iter().map(|d| d * (1.0 + 1e-14) + 1e-300).collect();
                    solve_tridiagonal(&disc.off, &shifted, &disc.off, &y)?
                }
            };
            let s = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(s > 0.0 && s.is_finite()) {
                return Err(HenonError::NoConvergence("inverse iteration broke down".into()));
            }
            y = z.iter().map(|v| v / s).collect();
        }
        let mut res = 0.0f64;
        for i in 0..n {
            let mut s = diag[i] * y[i];
            if i > 0 {
                s += disc.off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                s += disc.off[i] * y[i + 1];
            }
            res = res.max(s.abs());
        }
        Ok((y, res))
    }

    /// Eigenvalue `index` (1-based) on the base grid and its first refinement,
    /// combined by Richardson extrapolation. Returns `(value, error, fine value)`.
    pub fn richardson_eigenvalue(&self, index: usize) -> Result<(f64, f64, f64)> {
        let coarse = self.eigenvalue_on(&self.discretize(0), index)?;
        let fine = self.eigenvalue_on(&self.discretize(1), index)?;
        Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs() / 3.0, fine))
    }

    /// Number of eigenvalues of the refined discretization lying below `mu`.
    pub fn count_eigenvalues_below(&self, mu: f64) -> usize {
        self.count_below(&self.discretize(1), mu)
    }

    /// Eigenvalue from the base grid only.
    pub fn eigenvalue_base_grid(&self, index: usize) -> Result<f64> {
        self.eigenvalue_on(&self.discretize(0), index)
    }

    /// Pruefer angle at the right end for parameter `mu`.
    pub fn prufer_angle(&self, mu: f64) -> f64 {
        let (n, h) = self.cells(0);
        let steps = 4 * n;
        let dt = h * n as f64 / steps as f64;
        let rho = self.left_exponent(mu);
        let mut theta = 1.0f64.atan2(rho);
        let f = |t: f64, th: f64| {
            let (s, c) = th.sin_cos();
            c * c + self.profile.g(t) * s * c - self.c_coef(t, mu) * s * s
        };
        let t0 = self.t_left();
        for i in 0..steps {
            let t = t0 + i as f64 * dt;
            let k1 = f(t, theta);
            let k2 = f(t + 0.5 * dt, theta + 0.5 * dt * k1);
            let k3 = f(t + 0.5 * dt, theta + 0.5 * dt * k2);
            let k4 = f(t + dt, theta + dt * k3);
            theta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        theta
    }

    fn prufer_target(&self, index: usize, mu: f64) -> f64 {
        let base = (index - 1) as f64 * std::f64::consts::PI;
        match self.right {
            RightBc::Dirichlet => base + std::f64::consts::PI,
            RightBc::DecayMatched => base + 1.0f64.atan2(self.right_exponent(mu)),
        }
    }

    /// Eigenvalue `index` by Pruefer shooting, searching near `guess`.
    pub fn prufer_eigenvalue(&self, index: usize, guess: f64) -> Result<f64> {
        let mis = |mu: f64| self.prufer_angle(mu) - self.prufer_target(index, mu);
        let mut delta = 1e-3 * (1.0 + guess.abs());
        let (mut lo, mut hi) = (guess - delta, guess + delta);
        let mut flo = mis(lo);
        let mut fhi = mis(hi);
        let mut tries = 0;
        while !(flo < 0.0 && fhi > 0.0) {
            delta *= 2.0;
            if flo >= 0.0 {
                lo = guess - delta;
                flo = mis(lo);
            }
            if fhi <= 0.0 {
                hi = guess + delta;
                fhi = mis(hi);
            }
            tries += 1;
            if tries > 60 {
                return Err(HenonError::NoConvergence("Pruefer bracket not found".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 * (1.0 + mid.abs()) {
                break;
            }
            if mis(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn pair(&self, index: usize) -> Result<EigenPair> {
        let (value, err, fine) = self.richardson_eigenvalue(index)?;
        let prufer = if self.verify {
            let pv = self.prufer_eigenvalue(index, value)?;
            let tol = 10.0 * err + 1e-12 * (1.0 + value.abs());
            if (pv - value).abs() > tol {
                return Err(HenonError::GridTooCoarse { sturm: value, prufer: pv, tolerance: tol });
            }
            Some(pv)
        } else {
            None
        };
        let disc = self.discretize(1);
        let (y, residual) = self.eigenvector_on(&disc, fine)?;
        let profile = self.build_profile(&disc, &y, value)?;
        Ok(EigenPair { index, value, error_estimate: err, prufer_value: prufer, residual, profile })
    }

    fn build_profile(&self, disc: &Discrete, y: &[f64], mu: f64) -> Result<RadialFunction> {
        let lw: Vec<f64> = y
            .iter()
            .zip(&disc.ln_g)
            .map(|(v, lg)| if *v == 0.0 { f64::NEG_INFINITY } else { v.abs().ln() - 0.5 * lg })
            .collect();
        let top = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = disc.t.clone();
        let mut w: Vec<f64> = y.iter().zip(&lw).map(|(v, l)| v.signum() * (l - top).exp()).collect();
        if !disc.robin_right {
            t.push(self.t_right());
            w.push(0.0);
        }
        let m = t.len();
        let h = disc.h;
        let mut wt = vec![0.0; m];
        for i in 0..m {
            wt[i] = if i == 0 {
                (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * w[m - 1] - 4.0 * w[m - 2] + w[m - 3]) / (2.0 * h)
            } else {
                (w[i + 1] - w[i - 1]) / (2.0 * h)
            };
        }
        let rho = self.origin_exponent(mu);
        let tail = self.tail_exponent(mu);
        let mut grid = vec![0.0];
        let mut values = vec![if rho > 1e-6 { 0.0 } else { w[0] }];
        let mut ders = vec![0.0];
        for i in 0..m {
            let r = t[i].exp();
            grid.push(r);
            values.push(w[i]);
            ders.push(wt[i] / r);
        }
        if let Some(last) = grid.last_mut() {
            *last = self.r_max.max(*last);
        }
        let mut prof = RadialFunction::new(grid, values, rho.max(0.0), tail)?.with_derivatives(ders)?;
        prof.normalize_sup();
        Ok(prof)
    }
}

struct Discrete {
    h: f64,
    t: Vec<f64>,
    ln_g: Vec<f64>,
    base: Vec<f64>,
    omega: Vec<f64>,
    off: Vec<f64>,
    robin_right: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub index: usize,
    /// Richardson-extrapolated eigenvalue.
    pub value: f64,
    pub error_estimate: f64,
    pub prufer_value: Option<f64>,
    /// Max-norm discrete residual of the scaled eigenvector.
    pub residual: f64,
    pub profile: RadialFunction,
}

pub fn solve_first_eigen(problem: &SlProblem) -> Result<EigenPair> {
    problem.pair(1)
}

pub fn solve_spectrum(problem: &SlProblem, count: usize) -> Result<Vec<EigenPair>> {
    if count == 0 {
        return Err(HenonError::InvalidParams("eigenvalue count must be >= 1".into()));
    }
    let pairs: Vec<EigenPair> = (1..=count).map(|i| problem.pair(i)).collect::<Result<_>>()?;
    for w in pairs.windows(2) {
        if !(w[1].value > w[0].value) {
            return Err(HenonError::NoConvergence(format!(
                "eigenvalues {} and {} are not separated",
                w[0].value, w[1].value
            )));
        }
    }
    Ok(pairs)
}

/// Direction of the change of variable `s = r^{(p+alpha)/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformDirection {
    /// `r -> s = r^{(p+alpha)/p}`
    Forward,
    /// `s -> r = s^{p/(p+alpha)}`
    Inverse,
}

/// Change of variable mapping the weighted radial operator in dimension `N`
/// onto the unweighted one in dimension `M = p(N+alpha)/(p+alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleMap {
    pub direction: TransformDirection,
    pub exponent: f64,
    pub q: f64,
    pub transformed_dim: f64,
}

impl LiouvilleMap {
    pub fn apply(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            (self.exponent * x.ln()).exp()
        }
    }

    pub fn inverse(&self) -> LiouvilleMap {
        let direction = match self.direction {
            TransformDirection::Forward => TransformDirection::Inverse,
            TransformDirection::Inverse => TransformDirection::Forward,
        };
        LiouvilleMap { direction, exponent: 1.0 / self.exponent, ..*self }
    }

    /// Eigenvalue of the transformed angular problem from one in `r`: `mu_s = q^2 mu_r`.
    pub fn transform_eigenvalue(&self, mu_r: f64) -> f64 {
        self.q * self.q * mu_r
    }

    /// The bubble profile of the transformed problem (dimension `M`, no weight).
    pub fn transformed_profile(&self, p: f64) -> Result<LinearizedProfile> {
        LinearizedProfile::new(self.transformed_dim, p, 0.0)
    }
}

pub fn liouville_transform(params: &ProblemParams, direction: TransformDirection) -> LiouvilleMap {
    let q = params.q();
    let exponent = match direction {
        TransformDirection::Forward => 1.0 / q,
        TransformDirection::Inverse => q,
    };
    LiouvilleMap { direction, exponent, q, transformed_dim: params.transformed_dimension() }
}

fn domain_bounds(params: &ProblemParams, domain: Domain) -> Result<(f64, RightBc)> {
    match domain {
        Domain::Ball { eps } => {
            params.check_eps(eps)?;
            Ok((1.0 / eps, RightBc::Dirichlet))
        }
        Domain::WholeLine => Ok((DEFAULT_R_INF, RightBc::DecayMatched)),
    }
}

/// The angular-kind problem whose eigenvalue `mu` equals `-lambda_k` exactly
/// when the mode-`k` linearized equation has a solution.
pub fn assemble_mode_problem(params: &ProblemParams, k: u32, domain: Domain) -> Result<SlProblem> {
    let (r_max, right) = domain_bounds(params, domain)?;
    let left = if k == 0 { LeftBc::Regular } else { LeftBc::Vanishing };
    let mut prob = SlProblem::new(LinearizedProfile::from_params(params), SpectralKind::Angular, left, right, r_max);
    prob.k = k;
    Ok(prob)
}

/// The source-kind problem for mode `k`; its first eigenvalue is `mu_{1,k}`.
pub fn assemble_source_problem(params: &ProblemParams, k: u32, domain: Domain) -> Result<SlProblem> {
    let (r_max, right) = domain_bounds(params, domain)?;
    let left = if k == 0 { LeftBc::Regular } else { LeftBc::Vanishing };
    let kind = SpectralKind::Source { lambda: lambda_k(k, params.n) as f64 };
    let mut prob = SlProblem::new(LinearizedProfile::from_params(params), kind, left, right, r_max);
    prob.k = k;
    Ok(prob)
}

/// The transformed whole-line problem in dimension `M`; its eigenvalues are `-gamma_j`.
pub fn transformed_problem(params: &ProblemParams) -> Result<SlProblem> {
    let map = liouville_transform(params, TransformDirection::Forward);
    let prof = map.transformed_profile(params.p)?;
    Ok(SlProblem::new(prof, SpectralKind::Angular, LeftBc::Regular, RightBc::DecayMatched, DEFAULT_R_INF))
}

/// First angular eigenvalue `mu_1^eps(alpha)` on the ball of radius `1/eps`.
pub fn mu1_of_alpha(family: &ParamFamily, alpha: f64, eps: f64) -> Result<f64> {
    mu1_of_alpha_on_grid(family, alpha, eps, DEFAULT_LOG_STEP)
}

pub fn mu1_of_alpha_on_grid(family: &ParamFamily, alpha: f64, eps: f64, log_step: f64) -> Result<f64> {
    let params = family.at(alpha)?;
    let prob = assemble_mode_problem(&params, 1, Domain::Ball { eps })?.with_log_step(log_step).with_verify(false);
    Ok(prob.richardson_eigenvalue(1)?.0)
}

/// `mu_1^eps(alpha) - mu_1(alpha)`, the shift of the first angular eigenvalue
/// caused by the Dirichlet condition at `1/eps`, from Green's identity between
/// the ball eigenfunction `w_R` and the whole-space one `w`:
/// `shift * int G w_R w dt = -(p-1) G w_R' w |_{t = ln(1/eps)}`.
/// Unlike a difference of two eigenvalues it keeps full relative accuracy when
/// the shift is far below rounding level.
pub fn mu1_dirichlet_shift(params: &ProblemParams, eps: f64, log_step: f64) -> Result<f64> {
    let prob = assemble_mode_problem(params, 1, Domain::Ball { eps })?.with_log_step(log_step).with_verify(false);
    let pair = solve_first_eigen(&prob)?;
    let prof = &pair.profile;
    let ders = prof.derivatives.as_ref().expect("eigen profiles carry derivatives");
    let lp = LinearizedProfile::from_params(params);
    let t: Vec<f64> = prof.grid[1..].iter().map(|r| r.ln()).collect();
    let integrand: Vec<f64> = t
        .iter()
        .zip(&prof.values[1..])
        .map(|(&tt, w)| lp.ln_g(tt).exp() * w * limit_eigenfunction(params, tt.exp()))
        .collect();
    let denom = trapezoid(&t, &integrand);
    let last = prof.len() - 1;
    let r_end = prof.grid[last];
    let t_end = r_end.ln();
    let wt_end = r_end * ders[last];
    let num = -(params.p - 1.0) * lp.ln_g(t_end).exp() * wt_end * limit_eigenfunction(params, r_end);
    Ok(num / denom)
}

/// Closed-form `w(r) = r^{(p+alpha)/(p(p-1))}(1+r^{(p+alpha)/(p-1)})^{-(N+alpha)/(p+alpha)}`.
pub fn limit_eigenfunction(params: &ProblemParams, r: f64) -> f64 {
    crate::core_model::tangent_limit_profile(params, r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub value_slope: f64,
    pub value_bound_exponent: f64,
    pub value_constant: f64,
    pub gradient_slope: f64,
    pub gradient_bound_exponent: f64,
    pub gradient_constant: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub passed: bool,
}

/// Checks `|w| <= C r^{-(N-p)/(p-1)}` and `|w'| <= C r^{-(N-1)/(p-1)}` on
/// `[R/100, R/2]`: the fitted log-log slopes must not be shallower than the
/// bound exponents by more than 5%.
pub fn eigenfunction_decay_check(pair: &EigenPair, params: &ProblemParams) -> Result<DecayCheck> {
    let prof = &pair.profile;
    let r_end = prof.r_max();
    let (lo, hi) = (r_end / 100.0, r_end / 2.0);
    let idx: Vec<usize> = (0..prof.len()).filter(|&i| prof.grid[i] >= lo && prof.grid[i] <= hi).collect();
    if idx.len() < 50 {
        return Err(HenonError::WindowTooSmall { points: idx.len(), required: 50 });
    }
    let ders = prof.derivatives.clone().unwrap_or_else(|| vec![0.0; prof.len()]);
    let ev = params.value_decay_rate();
    let eg = params.gradient_decay_rate();
    let lx: Vec<f64> = idx.iter().map(|&i| prof.grid[i].ln()).collect();
    let lv: Vec<f64> = idx.iter().map(|&i| prof.values[i].abs().max(1e-300).ln()).collect();
    let lg: Vec<f64> = idx.iter().map(|&i| ders[i].abs().max(1e-300).ln()).collect();
    let fv = crate::numerics::fit_line(&lx, &lv);
    let fg = crate::numerics::fit_line(&lx, &lg);
    let cv = idx.iter().fold(0.0f64, |m, &i| m.max(prof.values[i].abs() * prof.grid[i].powf(ev)));
    let cg = idx.iter().fold(0.0f64, |m, &i| m.max(ders[i].abs() * prof.grid[i].powf(eg)));
    let passed = fv.slope <= -0.95 * ev && fg.slope <= -0.95 * eg;
    Ok(DecayCheck {
        value_slope: fv.slope,
        value_bound_exponent: -ev,
        value_constant: cv,
        gradient_slope: fg.slope,
        gradient_bound_exponent: -eg,
        gradient_constant: cg,
        window: (lo, hi),
        points: idx.len(),
        passed,
    })
}

/// Admissible range of the weight exponent `b` in the weighted Sobolev inequality.
pub fn sobolev_weight_range(params: &ProblemParams) -> (f64, f64) {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let lo = ((p * a - 2.0 * a - p) / (p - 1.0)).max((p * a + 2.0 * p - n) / (p - 1.0));
    let hi = (p + p * a) / (p - 1.0);
    (lo, hi)
}

/// Ratio `int r^{b+N-1} U^{p*-2} phi^2 dr / int r^{N-1} |U'|^{p-2} phi'^2 dr` for a
/// radial test function supported in `[0, r_max]`; `phi` returns `(phi, phi')`.
pub fn weighted_sobolev_ratio<F: Fn(f64) -> (f64, f64)>(params: &ProblemParams, b: f64, r_max: f64, phi: F) -> f64 {
    let prof = LinearizedProfile::from_params(params);
    let ps = params.critical_exponent();
    let (t0, t1) = (-30.0f64, r_max.ln());
    let n = 20000;
    let h = (t1 - t0) / n as f64;
    let mut num = Vec::with_capacity(n + 1);
    let mut den = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = t0 + i as f64 * h;
        let r = t.exp();
        let (v, dv) = phi(r);
        // r dt = dr
        num.push(((b + params.dim()) * t + (ps - 2.0) * prof.ln_u(t)).exp() * v * v);
        den.push((prof.ln_g(t) + 2.0 * t).exp() * dv * dv);
    }
    simpson_uniform(h, &num) / simpson_uniform(h, &den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::{evaluate_bubble, evaluate_bubble_derivative, mu_1k};
    use crate::harmonics::{alpha_crit, mu1_limit};
    use approx::assert_relative_eq;

    fn pp(n: u32, p: f64, a: f64) -> ProblemParams {
        ProblemParams::new(n, p, a).unwrap()
    }

    #[test]
    fn coefficients_match_the_linearization() {
        for &(n, p, a) in &[(4u32, 2.0, 2.0), (5, 3.0, 1.0), (3, 1.5, 0.5), (6, 2.5, 2.0)] {
            let params = pp(n, p, a);
            let prob = assemble_mode_problem(&params, 0, Domain::WholeLine).unwrap();
            let ps = params.critical_exponent();
            for i in 0..20 {
                let r = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
                let du = evaluate_bubble_derivative(&params, 1.0, r).abs();
                let u = evaluate_bubble(&params, 1.0, r);
                let nf = n as f64;
                assert_relative_eq!(
                    prob.diffusion(r),
                    (p - 1.0) * r.powf(nf - 1.0) * du.powf(p - 2.0),
                    max_relative = 1e-11
                );
                assert_relative_eq!(
                    prob.potential_weight(r),
                    r.powf(nf - 3.0) * du.powf(p - 2.0),
                    max_relative = 1e-11
                );
                assert_relative_eq!(
                    prob.source_weight(r),
                    (ps - 1.0) * r.powf(nf - 1.0 + a) * u.powf(ps - 2.0),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn endpoint_slopes() {
        let prof = LinearizedProfile::new(5.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(prof.g(-60.0), prof.g_left(), epsilon = 1e-12);
        assert_relative_eq!(prof.g(60.0), prof.g_right(), epsilon = 1e-12);
        let params = pp(5, 3.0, 1.0);
        assert_relative_eq!(prof.g_left() * 2.0, params.indicial_b(), epsilon = 1e-12);
    }

    #[test]
    fn liouville_round_trip() {
        let params = pp(4, 2.0, 2.0);
        let fwd = liouville_transform(&params, TransformDirection::Forward);
        let inv = liouville_transform(&params, TransformDirection::Inverse);
        assert_relative_eq!(fwd.transformed_dim, 3.0);
        assert_relative_eq!(inv.apply(9.0), 3.0, max_relative = 1e-15);
        for &r in &[1e-3, 0.5, 1.0, 7.0, 1e3] {
            assert_relative_eq!(inv.apply(fwd.apply(r)), r, max_relative = 1e-14);
            assert_relative_eq!(fwd.inverse().apply(fwd.apply(r)), r, max_relative = 1e-14);
        }
        let id = liouville_transform(&pp(5, 3.0, 0.0), TransformDirection::Forward);
        assert_eq!(id.exponent, 1.0);
        assert_eq!(id.transformed_dim, 5.0);
    }

    #[test]
    fn transformed_eigenvalue_matches_limit() {
        let params = pp(4, 2.0, 2.0);
        let map = liouville_transform(&params, TransformDirection::Forward);
        let m = params.transformed_dimension();
        assert_relative_eq!(map.transform_eigenvalue(mu1_limit(&params)), -(m - 1.0), max_relative = 1e-14);
    }

    #[test]
    fn source_problem_reproduces_closed_form_mu1k() {
        for &(n, p, a, k) in &[(4u32, 2.0, 1.0, 1u32), (5, 3.0, 1.0, 2), (4, 2.0, 0.5, 0)] {
            let params = pp(n, p, a);
            let prob = assemble_source_problem(&params, k, Domain::WholeLine).unwrap();
            let pair = solve_first_eigen(&prob).unwrap();
            assert_relative_eq!(pair.value, mu_1k(&params, k), max_relative = 1e-6);
        }
    }

    #[test]
    fn angular_first_eigenvalue_at_alpha_crit() {
        let a = alpha_crit(2, 5, 3.0);
        let params = pp(5, 3.0, a);
        let prob = assemble_mode_problem(&params, 2, Domain::WholeLine).unwrap();
        let pair = solve_first_eigen(&prob).unwrap();
        assert_relative_eq!(pair.value, -10.0, max_relative = 1e-6);
        assert_eq!(pair.profile.sign_changes(1e-8), 0);
        let dist = pair.profile.sup_distance_on(|r| limit_eigenfunction(&params, r) / limit_max(&params), 0.0, 10.0);
        assert!(dist < 1e-4, "dist {dist}");
    }

    fn limit_max(params: &ProblemParams) -> f64 {
        (0..20000).map(|i| limit_eigenfunction(params, i as f64 * 1e-3)).fold(0.0, f64::max)
    }

    #[test]
    fn ball_eigenvalues_have_the_expected_signs() {
        let params = pp(4, 2.0, 2.0);
        let prob = assemble_mode_problem(&params, 1, Domain::Ball { eps: 1e-2 }).unwrap();
        // the left end carries essential spectrum above (p-1) g_0^2 / 4 = 1 here
        let pairs = solve_spectrum(&prob, 2).unwrap();
        assert!(pairs[0].value < 0.0 && pairs[0].value > -8.0);
        assert!(pairs[1].value < 1.0);
        assert!(pairs[1].value > 0.0);
        for (i, pair) in pairs.iter().enumerate() {
            assert_eq!(pair.profile.sign_changes(1e-6), i);
            assert!(pair.residual < 1e-8);
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let params = pp(5, 3.0, 1.0);
        let prob = assemble_mode_problem(&params, 1, Domain::WholeLine).unwrap();
        let disc = prob.discretize(0);
        let mut prev = 0;
        for i in 0..200 {
            let mu = -20.0 + 0.2 * i as f64;
            let c = prob.count_below(&disc, mu);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn refinement_order_is_about_two() {
        let params = pp(4, 2.0, 2.0);
        let base = assemble_mode_problem(&params, 1, Domain::Ball { eps: 0.1 }).unwrap().with_log_step(0.04);
        let m1 = base.eigenvalue_base_grid(1).unwrap();
        let m2 = base.with_log_step(0.02).eigenvalue_base_grid(1).unwrap();
        let m3 = base.with_log_step(0.01).eigenvalue_base_grid(1).unwrap();
        let order = ((m1 - m2) / (m2 - m3)).abs().log2();
        assert!(order > 1.8, "order {order}");
    }
}
