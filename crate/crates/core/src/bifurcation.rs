//! Degenerate exponents `alpha_k^eps` of the ball problem, where the first
//! angular eigenvalue meets `-lambda_k`, and the tangent direction they carry.

use serde::{Deserialize, Serialize};

use crate::core_model::{ParamFamily, ProblemParams};
use crate::error::{HenonError, Result};
use crate::harmonics::{alpha_crit, dmu1_dalpha, lambda_k, multiplicity};
use crate::numerics::{bisect, fit_line};
use crate::profile::RadialFunction;
use crate::sturm_liouville::{
    assemble_mode_problem, mu1_dirichlet_shift, mu1_of_alpha_on_grid, solve_first_eigen, Domain, DEFAULT_LOG_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationConfig {
    pub log_step: f64,
    /// Stop once `|mu_1^eps + lambda_k|` drops below this.
    pub root_tol: f64,
    /// Or once the alpha bracket is this narrow.
    pub alpha_tol: f64,
    pub max_iter: usize,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self { log_step: DEFAULT_LOG_STEP, root_tol: 1e-10, alpha_tol: 1e-13, max_iter: 200 }
    }
}

/// Offset added to the lower bracket end `alpha(k)/2`.
const BRACKET_TINY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub n: u32,
    pub p: f64,
    pub k: u32,
    pub eps: f64,
    pub alpha_k_eps: f64,
    pub limit_alpha: f64,
    pub mu_residual: f64,
    /// First eigenfunction at the root, positive with sup norm 1.
    pub tangent: RadialFunction,
}

impl BifurcationPoint {
    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.n, self.p, self.alpha_k_eps)
    }

    pub fn error(&self) -> f64 {
        (self.alpha_k_eps - self.limit_alpha).abs()
    }
}

fn mu1(family: &ParamFamily, alpha: f64, eps: f64, log_step: f64) -> Result<f64> {
    mu1_of_alpha_on_grid(family, alpha, eps, log_step)
}

/// `mu_1^eps` at three points of `[lo, hi]`, refined once if not strictly decreasing.
fn monotone_samples(family: &ParamFamily, lo: f64, hi: f64, eps: f64, log_step: f64) -> Result<Vec<(f64, f64)>> {
    let xs = [lo, 0.5 * (lo + hi), hi];
    let sample = |h: f64| -> Result<Vec<(f64, f64)>> { xs.iter().map(|&a| Ok((a, mu1(family, a, eps, h)?))).collect() };
    let decreasing = |s: &[(f64, f64)]| s.windows(2).all(|w| w[1].1 < w[0].1);
    let s = sample(log_step)?;
    if decreasing(&s) {
        return Ok(s);
    }
    let s = sample(0.5 * log_step)?;
    if decreasing(&s) {
        Ok(s)
    } else {
        Err(HenonError::Nonmonotone { samples: s })
    }
}

/// Default bracket `[alpha(k)/2 + tiny, 2 alpha(k) + 2]`.
pub fn default_bracket(family: &ParamFamily, k: u32) -> (f64, f64) {
    let ak = alpha_crit(k, family.n, family.p);
    (0.5 * ak + BRACKET_TINY, 2.0 * ak + 2.0)
}

/// Root of `g(alpha) = mu_1^eps(alpha) + lambda_k` by bisection over the default bracket.
pub fn locate_alpha_k(family: &ParamFamily, k: u32, eps: f64, cfg: &BifurcationConfig) -> Result<BifurcationPoint> {
    let (lo, hi) = default_bracket(family, k);
    locate_alpha_k_in(family, k, eps, lo, hi, cfg)
}

pub fn locate_alpha_k_in(
    family: &ParamFamily,
    k: u32,
    eps: f64,
    lo: f64,
    hi: f64,
    cfg: &BifurcationConfig,
) -> Result<BifurcationPoint> {
    if k == 0 {
        return Err(HenonError::InvalidParams("k = 0 carries no bifurcation (radial nondegeneracy)".into()));
    }
    family.at(lo)?.check_eps(eps)?;
    family.at(hi)?.check_eps(eps)?;
    let lam = lambda_k(k, family.n) as f64;
    let samples = monotone_samples(family, lo, hi, eps, cfg.log_step)?;
    let g: Vec<(f64, f64)> = samples.iter().map(|&(a, m)| (a, m + lam)).collect();
    if g[0].1.signum() == g[2].1.signum() {
        return Err(HenonError::BracketFailed { samples: g });
    }
    let (root, _) =
        bisect(|a| Ok(mu1(family, a, eps, cfg.log_step)? + lam), lo, hi, cfg.root_tol, cfg.alpha_tol, cfg.max_iter)?;
    let params = family.at(root)?;
    let prob = assemble_mode_problem(&params, k, Domain::Ball { eps })?.with_log_step(cfg.log_step).with_verify(false);
    let pair = solve_first_eigen(&prob)?;
    Ok(BifurcationPoint {
        n: family.n,
        p: family.p,
        k,
        eps,
        alpha_k_eps: root,
        limit_alpha: alpha_crit(k, family.n, family.p),
        mu_residual: (pair.value + lam).abs(),
        tangent: pair.profile,
    })
}

/// `alpha_k^eps - alpha(k)` to first order in the eigenvalue shift at `alpha(k)`:
/// `-(mu_1^eps - mu_1)/mu_1'`. Resolves offsets far below the spacing of
/// floating-point numbers near `alpha(k)`.
pub fn alpha_k_offset(family: &ParamFamily, k: u32, eps: f64, log_step: f64) -> Result<f64> {
    if k == 0 {
        return Err(HenonError::InvalidParams("k = 0 carries no bifurcation (radial nondegeneracy)".into()));
    }
    let params = family.at(alpha_crit(k, family.n, family.p))?;
    let shift = mu1_dirichlet_shift(&params, eps, log_step)?;
    Ok(-shift / dmu1_dalpha(&params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Root from bisection.
    pub alpha_k_eps: f64,
    /// `alpha_k^eps - alpha(k)` from [`alpha_k_offset`].
    pub offset: f64,
    /// `|offset|`.
    pub error: f64,
    /// `|alpha_k_eps - alpha(k)|`, limited by the eigenvalue resolution.
    pub bisection_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub k: u32,
    pub limit_alpha: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln error` against `ln eps`.
    pub rate: f64,
}

impl ConvergenceTable {
    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

pub fn convergence_table(
    family: &ParamFamily,
    k: u32,
    eps_list: &[f64],
    cfg: &BifurcationConfig,
) -> Result<ConvergenceTable> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HenonError::InvalidParams("eps list must be strictly decreasing".into()));
    }
    let rows: Vec<ConvergenceRow> = eps_list
        .iter()
        .map(|&eps| {
            let pt = locate_alpha_k(family, k, eps, cfg)?;
            let offset = alpha_k_offset(family, k, eps, cfg.log_step)?;
            Ok(ConvergenceRow {
                eps,
                alpha_k_eps: pt.alpha_k_eps,
                offset,
                error: offset.abs(),
                bisection_error: pt.error(),
            })
        })
        .collect::<Result<_>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.error > 0.0).map(|r| (r.eps.ln(), r.error.ln())).unzip();
    let rate = if x.len() >= 2 { fit_line(&x, &y).slope } else { f64::NAN };
    Ok(ConvergenceTable { k, limit_alpha: alpha_crit(k, family.n, family.p), rows, rate })
}

/// The tangent profile `w_eps` at a located point.
pub fn tangent_field(point: &BifurcationPoint) -> &RadialFunction {
    &point.tangent
}

/// Maximiser and maximum of the limit profile `r^{a/p}(1+r^a)^{-e}`,
/// `a = (p+alpha)/(p-1)`, `e = (N+alpha)/(p+alpha)`: `r^a = 1/(p e - 1)`.
pub fn limit_tangent_max(params: &ProblemParams) -> (f64, f64) {
    let a = params.profile_power();
    let e = (params.dim() + params.alpha) / (params.p + params.alpha);
    let r = (params.p * e - 1.0).powf(-1.0 / a);
    (r, crate::core_model::tangent_limit_profile(params, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub k: u32,
    pub alpha: f64,
    /// Increase of the ball Morse index across the root.
    pub morse_jump: i128,
}

/// Morse index of the ball solution from the mode spectra: degree `k` contributes
/// `multiplicity(k)` times the number of angular eigenvalues below `-lambda_k`.
pub fn ball_morse_index(family: &ParamFamily, alpha: f64, eps: f64, k_max: u32, log_step: f64) -> Result<u128> {
    let params = family.at(alpha)?;
    let prob = assemble_mode_problem(&params, 0, Domain::Ball { eps })?.with_log_step(log_step).with_verify(false);
    let mut total = 0u128;
    for k in 0..=k_max {
        let c = prob.count_eigenvalues_below(-(lambda_k(k, family.n) as f64)) as u128;
        if c == 0 {
            break;
        }
        total += c * multiplicity(k, family.n);
    }
    Ok(total)
}

/// Whether the radial (`k = 0`) linearization is invertible: exactly one
/// angular eigenvalue below zero and none within `gap` of it.
pub fn radial_nondegenerate(params: &ProblemParams, eps: f64, log_step: f64, gap: f64) -> Result<bool> {
    let prob = assemble_mode_problem(params, 0, Domain::Ball { eps })?.with_log_step(log_step).with_verify(false);
    Ok(prob.count_eigenvalues_below(-gap) == 1 && prob.count_eigenvalues_below(gap) == 1)
}

/// All `(k, alpha)` with `1 <= k <= k_max` and `alpha` in `range` at which
/// `mu_1^eps(alpha) + lambda_k` changes sign, from `samples` points, each root
/// refined by bisection. Also returns whether `k = 0` stayed nondegenerate at
/// every sample.
pub fn degeneracy_scan(
    family: &ParamFamily,
    eps: f64,
    range: (f64, f64),
    k_max: u32,
    samples: usize,
    cfg: &BifurcationConfig,
) -> Result<(Vec<Degeneracy>, bool)> {
    let (a0, a1) = range;
    if !(a1 > a0 && samples >= 3) {
        return Err(HenonError::InvalidParams("degeneracy scan needs a nonempty range and >= 3 samples".into()));
    }
    let alphas: Vec<f64> = (0..samples).map(|i| a0 + (a1 - a0) * i as f64 / (samples - 1) as f64).collect();
    let mus: Vec<f64> = alphas.iter().map(|&a| mu1(family, a, eps, cfg.log_step)).collect::<Result<_>>()?;
    if mus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HenonError::Nonmonotone { samples: alphas.iter().cloned().zip(mus.iter().cloned()).collect() });
    }
    let mut radial_ok = true;
    for &a in &alphas {
        radial_ok &= radial_nondegenerate(&family.at(a)?, eps, cfg.log_step, 1e-8)?;
    }
    let mut found = Vec::new();
    for k in 1..=k_max {
        let lam = lambda_k(k, family.n) as f64;
        for i in 0..samples - 1 {
            let (g0, g1) = (mus[i] + lam, mus[i + 1] + lam);
            if g0 > 0.0 && g1 <= 0.0 {
                let pt = locate_alpha_k_in(family, k, eps, alphas[i], alphas[i + 1], cfg)?;
                let d = 1e-4 * (1.0 + pt.alpha_k_eps);
                let before = ball_morse_index(family, pt.alpha_k_eps - d, eps, k_max + 1, cfg.log_step)?;
                let after = ball_morse_index(family, pt.alpha_k_eps + d, eps, k_max + 1, cfg.log_step)?;
                found.push(Degeneracy { k, alpha: pt.alpha_k_eps, morse_jump: after as i128 - before as i128 });
            }
        }
    }
    Ok((found, radial_ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::tangent_limit_profile;

    fn fam(n: u32, p: f64) -> ParamFamily {
        ParamFamily::new(n, p).unwrap()
    }

    #[test]
    fn locates_alpha_2_for_the_laplacian() {
        let cfg = BifurcationConfig::default();
        let pt = locate_alpha_k(&fam(4, 2.0), 2, 0.01, &cfg).unwrap();
        assert!(pt.error() < 1e-3, "alpha = {}", pt.alpha_k_eps);
        assert!(pt.mu_residual < 1e-8);
        assert_eq!(pt.tangent.values[0], 0.0);
        assert!(pt.tangent.values.iter().all(|v| *v >= 0.0));
        assert!((pt.tangent.sup_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn offset_matches_bisection_where_resolvable() {
        let cfg = BifurcationConfig { root_tol: 0.0, ..Default::default() };
        for &(n, p, k) in &[(4u32, 2.0, 2u32), (5, 3.0, 2)] {
            let f = fam(n, p);
            let pt = locate_alpha_k(&f, k, 0.1, &cfg).unwrap();
            let off = alpha_k_offset(&f, k, 0.1, cfg.log_step).unwrap();
            assert!(off > 0.0);
            assert!(
                (pt.alpha_k_eps - pt.limit_alpha - off).abs() < 5e-3 * off,
                "{} vs {off}",
                pt.alpha_k_eps - pt.limit_alpha
            );
        }
    }

    #[test]
    fn roots_agree_across_brackets() {
        let cfg = BifurcationConfig::default();
        let f = fam(4, 2.0);
        let a = locate_alpha_k_in(&f, 2, 0.1, 1.0, 2.5, &cfg).unwrap();
        let b = locate_alpha_k_in(&f, 2, 0.1, 1.5, 4.0, &cfg).unwrap();
        assert!((a.alpha_k_eps - b.alpha_k_eps).abs() < 1e-8);
    }

    #[test]
    fn k1_root_is_small_and_positive() {
        let cfg = BifurcationConfig::default();
        let pt = locate_alpha_k(&fam(4, 2.0), 1, 0.1, &cfg).unwrap();
        assert!(pt.alpha_k_eps > 0.0 && pt.alpha_k_eps < 0.1, "{}", pt.alpha_k_eps);
    }

    #[test]
    fn bracket_failure_reports_samples() {
        let cfg = BifurcationConfig::default();
        let err = locate_alpha_k_in(&fam(4, 2.0), 2, 0.1, 3.0, 5.0, &cfg).unwrap_err();
        match err {
            HenonError::BracketFailed { samples } => assert_eq!(samples.len(), 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn roots_increase_with_k() {
        let cfg = BifurcationConfig::default();
        let f = fam(5, 3.0);
        let a2 = locate_alpha_k(&f, 2, 0.05, &cfg).unwrap().alpha_k_eps;
        let a3 = locate_alpha_k(&f, 3, 0.05, &cfg).unwrap().alpha_k_eps;
        assert!(a3 > a2);
    }

    #[test]
    fn limit_max_solves_first_order_condition() {
        let params = ProblemParams::new(4, 2.0, 2.0).unwrap();
        let (r, w) = limit_tangent_max(&params);
        let h = 1e-5;
        let d = tangent_limit_profile(&params, r + h) - tangent_limit_profile(&params, r - h);
        assert!(d.abs() < 1e-10);
        assert!(w > tangent_limit_profile(&params, 0.9 * r) && w > tangent_limit_profile(&params, 1.1 * r));
    }

    #[test]
    fn scan_finds_one_root_per_degree_with_multiplicity_jump() {
        let cfg = BifurcationConfig::default();
        let (found, radial_ok) = degeneracy_scan(&fam(4, 2.0), 0.1, (0.5, 5.0), 3, 10, &cfg).unwrap();
        assert!(radial_ok);
        let ks: Vec<u32> = found.iter().map(|d| d.k).collect();
        assert_eq!(ks, vec![2, 3]);
        assert_eq!(found[0].morse_jump, 9);
        assert_eq!(found[1].morse_jump, multiplicity(3, 4) as i128);
    }
}
