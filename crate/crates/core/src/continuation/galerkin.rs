//! P1 finite elements in `r` times orthonormal angular profiles: the weak
//! residual of `-Delta_p u = |x|^alpha (u + beta)^{p*-1}` on the ball, `u = 0` on its boundary.

use serde::{Deserialize, Serialize};

use crate::continuation::basis::{AngularBasis, SymmetrySector};
use crate::core_model::{approx_radial_solution, beta_boundary, evaluate_bubble, ParamFamily, ProblemParams};
use crate::error::{HenonError, Result};
use crate::numerics::{max_abs, solve_tridiagonal, BandMatrix};
use crate::quadrature::{gauss_legendre, GaussRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalerkinConfig {
    /// Number of radial elements.
    pub elements: usize,
    /// Grading strength `gamma` of `r_i = R (e^{gamma i/n} - 1)/(e^gamma - 1)`; `None` uses `2 ln R`.
    pub grading: Option<f64>,
    /// Highest mode multiple `J`: degrees up to `J k`.
    pub j_max: u32,
    /// Angular Gauss points; `None` picks the aliasing bound.
    pub angular_points: Option<usize>,
    /// Relative finite-difference step for Jacobians.
    pub fd_step: f64,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        Self { elements: 400, grading: None, j_max: 3, angular_points: None, fd_step: 1e-6 }
    }
}

/// Graded radial grid on `[0, R]`.
pub fn graded_grid(radius: f64, elements: usize, grading: f64) -> Vec<f64> {
    let g = grading.max(1e-8);
    let denom = g.exp_m1();
    (0..=elements)
        .map(|i| if i == elements { radius } else { radius * (g * i as f64 / elements as f64).exp_m1() / denom })
        .collect()
}

/// Angular exactness needed by the nonlinearity for modes up to Jacobi index `top`.
pub fn required_exactness(power: f64, top: usize) -> usize {
    let h = power.ceil().clamp(1.0, 3.0) as usize + 1;
    h * top.max(1)
}

#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub family: ParamFamily,
    pub eps: f64,
    pub basis: AngularBasis,
    pub grid: Vec<f64>,
    pub config: GalerkinConfig,
    radial_rule: GaussRule,
    /// Source magnitude of the radial solution at the reference alpha; residuals are divided by it.
    pub source_scale: f64,
    /// `u_{eps,alpha}(0)` at the reference alpha.
    pub u_scale: f64,
}

impl GalerkinSystem {
    pub fn new(
        family: ParamFamily,
        eps: f64,
        sector: SymmetrySector,
        alpha_ref: f64,
        config: GalerkinConfig,
    ) -> Result<Self> {
        if sector.n != family.n {
            return Err(HenonError::InvalidParams(format!(
                "sector dimension {} differs from N = {}",
                sector.n, family.n
            )));
        }
        if config.elements < 4 || !(config.fd_step > 0.0) || config.j_max == 0 {
            return Err(HenonError::InvalidParams(
                "galerkin grid needs >= 4 elements, J >= 1 and a positive step".into(),
            ));
        }
        let params = family.at(alpha_ref)?;
        params.check_eps(eps)?;
        let radius = 1.0 / eps;
        let provisional = AngularBasis::new(sector, config.j_max, 2);
        let top = provisional.top_index();
        let power = params.critical_exponent() - 1.0;
        let required = required_exactness(power, top);
        let points = config.angular_points.unwrap_or(required);
        if 2 * points - 1 < required {
            return Err(HenonError::Aliasing { required, available: 2 * points - 1 });
        }
        let basis = AngularBasis::new(sector, config.j_max, points);
        let grading = config.grading.unwrap_or(2.0 * radius.ln()).max(1.0);
        let grid = graded_grid(radius, config.elements, grading);
        let mut sys =
            Self { family, eps, basis, grid, config, radial_rule: gauss_legendre(3), source_scale: 1.0, u_scale: 1.0 };
        sys.u_scale = evaluate_bubble(&params, 1.0, 0.0) - beta_boundary(&params, eps);
        let seed = sys.closed_form_radial(alpha_ref)?;
        sys.source_scale = max_abs(&sys.source_part(&seed, alpha_ref)?);
        Ok(sys)
    }

    pub fn params(&self, alpha: f64) -> Result<ProblemParams> {
        self.family.at(alpha)
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.eps
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }

    pub fn dof(&self) -> usize {
        self.nodes() * self.modes()
    }

    pub fn index(&self, node: usize, mode: usize) -> usize {
        node * self.modes() + mode
    }

    /// Position of the base degree `k` in the mode list.
    pub fn base_mode(&self) -> usize {
        self.basis.position_of_degree(self.basis.sector.base_degree).expect("base degree is always a mode")
    }

    fn is_fixed(&self, node: usize, mode: usize) -> bool {
        node + 1 == self.nodes() || (node == 0 && self.basis.degrees[mode] > 0)
    }

    /// Nodal values of `u_{eps,alpha}` in mode 0, zero elsewhere.
    pub fn closed_form_radial(&self, alpha: f64) -> Result<Vec<f64>> {
        let params = self.params(alpha)?;
        let mut c = vec![0.0; self.dof()];
        for (i, &r) in self.grid.iter().enumerate() {
            c[self.index(i, 0)] = approx_radial_solution(&params, self.eps, r)?;
        }
        c[self.index(self.nodes() - 1, 0)] = 0.0;
        Ok(c)
    }

    /// Mode profile `c_j` at the nodes.
    pub fn amplitude(&self, c: &[f64], mode: usize) -> Vec<f64> {
        (0..self.nodes()).map(|i| c[self.index(i, mode)]).collect()
    }

    pub fn amplitudes(&self, c: &[f64]) -> Vec<Vec<f64>> {
        (0..self.modes()).map(|j| self.amplitude(c, j)).collect()
    }

    pub fn from_amplitudes(&self, amps: &[Vec<f64>]) -> Vec<f64> {
        let mut c = vec![0.0; self.dof()];
        for (j, a) in amps.iter().enumerate() {
            for (i, v) in a.iter().enumerate() {
                c[self.index(i, j)] = *v;
            }
        }
        c
    }

    fn element_of(&self, r: f64) -> usize {
        match self.grid.binary_search_by(|g| g.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.nodes() - 2),
            Err(i) => i.saturating_sub(1).min(self.nodes() - 2),
        }
    }

    /// Mode coefficients `c_j(r)` by linear interpolation (zero beyond `R`).
    pub fn coefficients_at(&self, c: &[f64], r: f64) -> Vec<f64> {
        if r >= self.radius() {
            return vec![0.0; self.modes()];
        }
        let e = self.element_of(r);
        let (r0, r1) = (self.grid[e], self.grid[e + 1]);
        let s = (r - r0) / (r1 - r0);
        (0..self.modes()).map(|j| (1.0 - s) * c[self.index(e, j)] + s * c[self.index(e + 1, j)]).collect()
    }

    /// Reconstructed `u(r, x)`.
    pub fn evaluate(&self, c: &[f64], r: f64, x: f64) -> f64 {
        let coef = self.coefficients_at(c, r);
        let p = self.basis.eval(x);
        coef.iter().zip(&p).map(|(a, b)| a * b).sum()
    }

    fn exponents(&self, alpha: f64) -> Result<(f64, f64)> {
        let params = self.params(alpha)?;
        Ok((params.critical_exponent() - 1.0, beta_boundary(&params, self.eps)))
    }

    /// Weak residual divided by `source_scale`; fixed rows hold `c / u_scale`.
    pub fn residual(&self, c: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let (power, beta) = self.exponents(alpha)?;
        let mut out = self.assemble(c, alpha, power, beta, true)?;
        self.finish_rows(c, &mut out);
        Ok(out)
    }

    /// Sup norm of the scaled residual.
    pub fn residual_norm(&self, c: &[f64], alpha: f64) -> Result<f64> {
        Ok(max_abs(&self.residual(c, alpha)?))
    }

    /// Source contribution alone, unscaled, free rows only.
    fn source_part(&self, c: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let (power, beta) = self.exponents(alpha)?;
        let mut out = self.assemble(c, alpha, power, beta, false)?;
        for i in 0..self.nodes() {
            for j in 0..self.modes() {
                if self.is_fixed(i, j) {
                    out[self.index(i, j)] = 0.0;
                }
            }
        }
        Ok(out)
    }

    fn finish_rows(&self, c: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.source_scale;
        for i in 0..self.nodes() {
            for j in 0..self.modes() {
                let k = self.index(i, j);
                out[k] = if self.is_fixed(i, j) { c[k] / self.u_scale } else { out[k] * inv };
            }
        }
    }

    fn assemble(&self, c: &[f64], alpha: f64, power: f64, beta: f64, with_flux: bool) -> Result<Vec<f64>> {
        let nm = self.modes();
        let n_dim = self.family.n as f64;
        let p = self.family.p;
        let sigma = self.basis.sector.sigma();
        let half_exp = (p - 2.0) / 2.0;
        let mut out = vec![0.0; self.dof()];
        let mut cv = vec![0.0; nm];
        let mut cd = vec![0.0; nm];
        let mut fr = vec![0.0; nm];
        let mut fx = vec![0.0; nm];
        let mut src = vec![0.0; nm];
        for e in 0..self.nodes() - 1 {
            let (r0, r1) = (self.grid[e], self.grid[e + 1]);
            let h = r1 - r0;
            for (xi, wq) in self.radial_rule.nodes.iter().zip(&self.radial_rule.weights) {
                let s = 0.5 * (1.0 + xi);
                let r = r0 + s * h;
                let w = 0.5 * h * wq * r.powf(n_dim - 1.0);
                let ra = r.powf(alpha);
                for j in 0..nm {
                    let a = c[e * nm + j];
                    let b = c[(e + 1) * nm + j];
                    cv[j] = (1.0 - s) * a + s * b;
                    cd[j] = (b - a) / h;
                }
                fr.iter_mut().for_each(|v| *v = 0.0);
                fx.iter_mut().for_each(|v| *v = 0.0);
                src.iter_mut().for_each(|v| *v = 0.0);
                for (q, &x) in self.basis.rule.nodes.iter().enumerate() {
                    let pv = &self.basis.values[q];
                    let pd = &self.basis.slopes[q];
                    let oq = self.basis.rule.weights[q];
                    let mut u = 0.0;
                    let mut ur = 0.0;
                    let mut ux = 0.0;
                    for j in 0..nm {
                        u += cv[j] * pv[j];
                        ur += cd[j] * pv[j];
                        ux += cv[j] * pd[j];
                    }
                    let shifted = u + beta;
                    let f = shifted.signum() * shifted.abs().powf(power);
                    if !f.is_finite() {
                        return Err(HenonError::Blowup { r });
                    }
                    let sq = oq * ra * f;
                    for j in 0..nm {
                        src[j] += sq * pv[j];
                    }
                    if with_flux {
                        let ang = sigma * (1.0 - x * x) * ux / (r * r);
                        let g2 = ur * ur + ang * ux;
                        let amp = if p == 2.0 {
                            1.0
                        } else if g2 > 0.0 {
                            g2.powf(half_exp)
                        } else {
                            0.0
                        };
                        let a_r = oq * amp * ur;
                        let a_x = oq * amp * ang;
                        for j in 0..nm {
                            fr[j] += a_r * pv[j];
                            fx[j] += a_x * pd[j];
                        }
                    }
                }
                let (n0, n1) = (1.0 - s, s);
                let (d0, d1) = (-1.0 / h, 1.0 / h);
                for j in 0..nm {
                    out[e * nm + j] += w * (fr[j] * d0 + (fx[j] - src[j]) * n0);
                    out[(e + 1) * nm + j] += w * (fr[j] * d1 + (fx[j] - src[j]) * n1);
                }
            }
        }
        if !with_flux {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(out)
    }

    fn fd_h(&self) -> f64 {
        self.config.fd_step * self.u_scale
    }

    /// Banded Jacobian of the scaled residual by colored central differences.
    pub fn jacobian(&self, c: &[f64], alpha: f64) -> Result<BandMatrix> {
        let nm = self.modes();
        let n = self.nodes();
        let band = 2 * nm - 1;
        let mut jac = BandMatrix::zeros(self.dof(), band, band);
        let h = self.fd_h();
        let mut x = c.to_vec();
        for color in 0..3 {
            for j in 0..nm {
                let cols: Vec<usize> = (color..n).step_by(3).map(|i| self.index(i, j)).collect();
                for &k in &cols {
                    x[k] = c[k] + h;
                }
                let gp = self.residual(&x, alpha)?;
                for &k in &cols {
                    x[k] = c[k] - h;
                }
                let gm = self.residual(&x, alpha)?;
                for &k in &cols {
                    x[k] = c[k];
                }
                for row_node in 0..n {
                    let lo = row_node.saturating_sub(1);
                    let hi = (row_node + 1).min(n - 1);
                    let Some(col_node) = (lo..=hi).find(|i| i % 3 == color) else {
                        continue;
                    };
                    let col = self.index(col_node, j);
                    for jr in 0..nm {
                        let row = self.index(row_node, jr);
                        let v = (gp[row] - gm[row]) / (2.0 * h);
                        if v != 0.0 {
                            jac.set(row, col, v);
                        }
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Tridiagonal block `(lower, diag, upper)` of the Jacobian for one mode over all nodes.
    pub fn mode_block(&self, c: &[f64], alpha: f64, mode: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.nodes();
        let h = self.fd_h();
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];
        let mut x = c.to_vec();
        for color in 0..3 {
            let cols: Vec<usize> = (color..n).step_by(3).collect();
            for &i in &cols {
                x[self.index(i, mode)] = c[self.index(i, mode)] + h;
            }
            let gp = self.residual(&x, alpha)?;
            for &i in &cols {
                x[self.index(i, mode)] = c[self.index(i, mode)] - h;
            }
            let gm = self.residual(&x, alpha)?;
            for &i in &cols {
                x[self.index(i, mode)] = c[self.index(i, mode)];
            }
            for &col in &cols {
                let d = |row: usize| (gp[self.index(row, mode)] - gm[self.index(row, mode)]) / (2.0 * h);
                diag[col] = d(col);
                if col > 0 {
                    upper[col - 1] = d(col - 1);
                }
                if col + 1 < n {
                    lower[col] = d(col + 1);
                }
            }
        }
        Ok((lower, diag, upper))
    }

    /// Derivative of the scaled residual in `alpha` by central differences.
    pub fn d_alpha(&self, c: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let h = 1e-6 * (1.0 + alpha.abs());
        let gp = self.residual(c, alpha + h)?;
        let gm = self.residual(c, alpha - h)?;
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    }

    /// Discrete radial solution at `alpha` by Newton on the mode-0 block,
    /// started from the closed form.
    pub fn solve_radial(&self, alpha: f64, tol: f64) -> Result<Vec<f64>> {
        let mut c = self.closed_form_radial(alpha)?;
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            let g = self.residual(&c, alpha)?;
            let norm = max_abs(&g);
            if norm <= tol || (norm >= 0.5 * last && norm < 1e3 * tol) {
                return Ok(c);
            }
            last = norm;
            let (lo, d, up) = self.mode_block(&c, alpha, 0)?;
            let rhs: Vec<f64> = (0..self.nodes()).map(|i| -g[self.index(i, 0)]).collect();
            let step = solve_tridiagonal(&lo, &d, &up, &rhs)?;
            for (i, s) in step.iter().enumerate() {
                c[self.index(i, 0)] += s;
            }
        }
        let norm = self.residual_norm(&c, alpha)?;
        if norm <= 1e3 * tol {
            Ok(c)
        } else {
            Err(HenonError::NoConvergence(format!("radial Newton stalled at residual {norm:e}")))
        }
    }

    /// Smallest `u + beta` over the nodes and quadrature points, with its radius.
    pub fn min_shifted_value(&self, c: &[f64], alpha: f64) -> Result<(f64, f64)> {
        let (_, beta) = self.exponents(alpha)?;
        let mut best = (0.0, f64::INFINITY);
        let mut xs = self.basis.rule.nodes.clone();
        xs.push(-1.0);
        xs.push(1.0);
        for (i, &r) in self.grid.iter().enumerate() {
            for &x in &xs {
                let p = self.basis.eval(x);
                let u: f64 = (0..self.modes()).map(|j| c[self.index(i, j)] * p[j]).sum();
                if u + beta < best.1 {
                    best = (r, u + beta);
                }
            }
        }
        Ok(best)
    }

    /// Nodal mode coefficients of a field `f(r, x)` by projection with an `points`-point rule.
    pub fn project<F: Fn(f64, f64) -> f64>(&self, f: F, points: usize) -> Vec<f64> {
        let (a, b) = self.basis.sector.jacobi_exponents();
        let rule = crate::quadrature::gauss_jacobi(points, a, b);
        let ps: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| self.basis.eval(x)).collect();
        let mut c = vec![0.0; self.dof()];
        for (i, &r) in self.grid.iter().enumerate() {
            for (q, &x) in rule.nodes.iter().enumerate() {
                let v = rule.weights[q] * f(r, x);
                for j in 0..self.modes() {
                    c[self.index(i, j)] += v * ps[q][j];
                }
            }
        }
        c
    }
}
