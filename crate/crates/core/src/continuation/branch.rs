//! Discrete bifurcation point of the Galerkin system and pseudo-arclength
//! continuation of the branch that leaves it.

use serde::{Deserialize, Serialize};

use crate::bifurcation::BifurcationPoint;
use crate::continuation::basis::SymmetrySector;
use crate::continuation::galerkin::{GalerkinConfig, GalerkinSystem};
use crate::core_model::ParamFamily;
use crate::error::{HenonError, Result};
use crate::numerics::{max_abs, solve_bordered, solve_tridiagonal};
use crate::quadrature::tridiagonal_count_below;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub galerkin: GalerkinConfig,
    /// Corrector tolerance on the scaled residual.
    pub tol: f64,
    pub steps: usize,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_halvings: u32,
    pub max_newton: usize,
    /// Sign of the initial predictor along the null direction.
    pub direction: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            galerkin: GalerkinConfig::default(),
            tol: 1e-9,
            steps: 20,
            ds: 1e-2,
            ds_min: 1e-4,
            ds_max: 1e-1,
            max_halvings: 6,
            max_newton: 10,
            direction: 1.0,
        }
    }
}

impl ContinuationConfig {
    /// Initial predictor amplitude `10 sqrt(tol)`.
    pub fn seed_offset(&self) -> f64 {
        10.0 * self.tol.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.ds_min > 0.0
            && self.ds_min <= self.ds
            && self.ds <= self.ds_max
            && (self.direction == 1.0 || self.direction == -1.0)
            && self.max_newton > 0;
        if ok {
            Ok(())
        } else {
            Err(HenonError::InvalidParams(
                "continuation needs tol > 0, ds_min <= ds <= ds_max and direction +-1".into(),
            ))
        }
    }
}

/// The degenerate radial state of the discrete system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBifurcation {
    pub alpha: f64,
    /// Alpha of the Sturm-Liouville locator used as the starting guess.
    pub guess: f64,
    pub radial: Vec<f64>,
    /// Null vector of the base-mode block at the nodes, positive maximum 1.
    pub null_mode: Vec<f64>,
}

fn symmetric_scaled_block(
    sys: &GalerkinSystem,
    c: &[f64],
    alpha: f64,
    mode: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (lo, d, up) = sys.mode_block(c, alpha, mode)?;
    // free nodes 1 ..= n-2
    let n = sys.nodes();
    let scale: Vec<f64> = (1..n - 1).map(|i| d[i].abs().max(f64::MIN_POSITIVE).sqrt()).collect();
    let diag: Vec<f64> = (1..n - 1).map(|i| d[i] / (scale[i - 1] * scale[i - 1])).collect();
    let off: Vec<f64> = (1..n - 2).map(|i| 0.5 * (up[i] + lo[i]) / (scale[i - 1] * scale[i])).collect();
    Ok((diag, off, scale))
}

fn negative_count(sys: &GalerkinSystem, alpha: f64, tol: f64) -> Result<usize> {
    let c = sys.solve_radial(alpha, tol)?;
    let (d, e, _) = symmetric_scaled_block(sys, &c, alpha, sys.base_mode())?;
    Ok(tridiagonal_count_below(&d, &e, 0.0))
}

fn lowest_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if tridiagonal_count_below(d, e, m) >= 1 {
            hi = m;
        } else {
            lo = m;
        }
    }
    0.5 * (lo + hi)
}

/// Locates the alpha where the base-mode block of the radial Jacobian turns
/// singular, by bisection on its negative-eigenvalue count.
pub fn discrete_bifurcation(sys: &GalerkinSystem, guess: f64, tol: f64) -> Result<DiscreteBifurcation> {
    let mut delta = 0.01 * (1.0 + guess.abs());
    let (mut lo, mut hi, count_lo) = loop {
        let lo = (guess - delta).max(1e-9);
        let hi = guess + delta;
        let cl = negative_count(sys, lo, tol)?;
        let ch = negative_count(sys, hi, tol)?;
        if ch > cl {
            break (lo, hi, cl);
        }
        delta *= 2.0;
        if delta > 4.0 * (1.0 + guess.abs()) {
            return Err(HenonError::BracketFailed { samples: vec![(lo, cl as f64), (hi, ch as f64)] });
        }
    };
    while hi - lo > 1e-11 * (1.0 + guess.abs()) {
        let mid = 0.5 * (lo + hi);
        if negative_count(sys, mid, tol)? > count_lo {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let radial = sys.solve_radial(alpha, tol)?;
    let (d, e, scale) = symmetric_scaled_block(sys, &radial, alpha, sys.base_mode())?;
    let theta = lowest_eigenvalue(&d, &e);
    let shift = theta - 1e-9 * (1.0 + theta.abs());
    let shifted: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut y = vec![1.0; d.len()];
    for _ in 0..4 {
        y = solve_tridiagonal(&e, &shifted, &e, &y)?;
        let m = max_abs(&y);
        y.iter_mut().for_each(|v| *v /= m);
    }
    let mut null_mode = vec![0.0; sys.nodes()];
    for (i, v) in y.iter().enumerate() {
        null_mode[i + 1] = v / scale[i];
    }
    let imax = null_mode
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let norm = null_mode[imax];
    null_mode.iter_mut().for_each(|v| *v /= norm);
    Ok(DiscreteBifurcation { alpha, guess, radial, null_mode })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchState {
    pub alpha: f64,
    /// Nodal values of each mode profile `c_j(r_i)`.
    pub amplitudes: Vec<Vec<f64>>,
    pub arclength: f64,
    /// Arclength increment prescribed for the step that produced this state.
    pub ds: f64,
    /// Sup norm of the base-degree amplitude.
    pub symmetry_defect: f64,
    /// Base-degree amplitude at its largest magnitude, with sign.
    pub signed_defect: f64,
    pub newton_residual: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BranchEvent {
    /// `d alpha` changed sign between consecutive secants.
    FoldSuspected {
        index: usize,
        alpha: f64,
    },
    StepRejected {
        index: usize,
        ds: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub sector: SymmetrySector,
    pub n: u32,
    pub p: f64,
    pub eps: f64,
    pub grid: Vec<f64>,
    pub degrees: Vec<u32>,
    pub bifurcation_alpha: f64,
    pub locator_alpha: f64,
    pub tol: f64,
    /// First entry is the radial state at the bifurcation point.
    pub states: Vec<BranchState>,
    pub events: Vec<BranchEvent>,
    #[serde(skip)]
    pub termination: Option<HenonError>,
    #[serde(skip)]
    pub system: GalerkinSystem,
}

impl Branch {
    /// Accepted states past the bifurcation point.
    pub fn accepted(&self) -> &[BranchState] {
        &self.states[1..]
    }

    pub fn coefficients(&self, state: &BranchState) -> Vec<f64> {
        self.system.from_amplitudes(&state.amplitudes)
    }

    /// Extended-norm distances between consecutive states.
    pub fn step_lengths(&self) -> Vec<f64> {
        self.states
            .windows(2)
            .map(|w| {
                let a = self.extended(&self.coefficients(&w[0]), w[0].alpha);
                let b = self.extended(&self.coefficients(&w[1]), w[1].alpha);
                extended_norm(&self.system, &diff(&b, &a))
            })
            .collect()
    }

    fn extended(&self, c: &[f64], alpha: f64) -> Vec<f64> {
        let mut x = c.to_vec();
        x.push(alpha);
        x
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn weight(sys: &GalerkinSystem) -> f64 {
    1.0 / (sys.u_scale * sys.u_scale * sys.nodes() as f64)
}

fn extended_dot(sys: &GalerkinSystem, a: &[f64], b: &[f64]) -> f64 {
    let n = sys.dof();
    let w = weight(sys);
    w * a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum::<f64>() + a[n] * b[n]
}

/// Norm `sum c^2 / (u_scale^2 n_nodes) + alpha^2`, square-rooted.
pub fn extended_norm(sys: &GalerkinSystem, x: &[f64]) -> f64 {
    extended_dot(sys, x, x).sqrt()
}

fn defect(sys: &GalerkinSystem, c: &[f64]) -> (f64, f64) {
    let a = sys.amplitude(c, sys.base_mode());
    let i = a.iter().enumerate().max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap()).map(|(i, _)| i).unwrap_or(0);
    (a[i].abs(), a[i])
}

fn make_state(
    sys: &GalerkinSystem,
    x: &[f64],
    arclength: f64,
    ds: f64,
    residual: f64,
    iterations: usize,
) -> BranchState {
    let n = sys.dof();
    let (d, s) = defect(sys, &x[..n]);
    BranchState {
        alpha: x[n],
        amplitudes: sys.amplitudes(&x[..n]),
        arclength,
        ds,
        symmetry_defect: d,
        signed_defect: s,
        newton_residual: residual,
        newton_iterations: iterations,
    }
}

/// Newton on `G(c, alpha) = 0`, `<X - base, tau> = s` from `start`.
fn correct(
    sys: &GalerkinSystem,
    start: &[f64],
    base: &[f64],
    tau: &[f64],
    s: f64,
    cfg: &ContinuationConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = sys.dof();
    let w = weight(sys);
    let border: Vec<f64> = tau[..n].iter().map(|t| w * t).collect();
    let mut x = start.to_vec();
    let mut last = f64::INFINITY;
    for it in 0..=cfg.max_newton {
        let g = sys.residual(&x[..n], x[n])?;
        let res = max_abs(&g);
        let constraint = extended_dot(sys, &diff(&x, base), tau) - s;
        if !res.is_finite() {
            break;
        }
        if res <= cfg.tol && constraint.abs() <= cfg.tol {
            return Ok((x, res, it));
        }
        if it == cfg.max_newton || (it > 1 && res > 2.0 * last) {
            break;
        }
        last = res;
        let jac = sys.jacobian(&x[..n], x[n])?;
        let ga = sys.d_alpha(&x[..n], x[n])?;
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let (dc, da) = solve_bordered(&jac, &ga, &border, tau[n], &rhs, -constraint)?;
        for (xi, d) in x.iter_mut().zip(&dc) {
            *xi += d;
        }
        x[n] += da;
    }
    Err(HenonError::NoConvergence("corrector".into()))
}

/// Re-aims the first step along the secant until its length matches `s`.
fn refine_seed(
    sys: &GalerkinSystem,
    mut attempt: Result<(Vec<f64>, f64, usize)>,
    prev: &[f64],
    tau: &mut Vec<f64>,
    s: f64,
    cfg: &ContinuationConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    for _ in 0..4 {
        let x = match &attempt {
            Ok((x, _, _)) => x.clone(),
            Err(_) => return attempt,
        };
        let step = diff(&x, prev);
        let len = extended_norm(sys, &step);
        if len <= 1.5 * s {
            break;
        }
        *tau = step.iter().map(|v| v / len).collect();
        let pred: Vec<f64> = prev.iter().zip(tau.iter()).map(|(a, t)| a + s * t).collect();
        attempt = correct(sys, &pred, prev, tau, s, cfg);
    }
    attempt
}

/// Pseudo-arclength continuation of the non-radial branch born at the base
/// degree of `sector`, seeded at the locator's `alpha_k^eps`.
pub fn continue_branch(start: &BifurcationPoint, sector: SymmetrySector, cfg: &ContinuationConfig) -> Result<Branch> {
    cfg.validate()?;
    if sector.base_degree != start.k {
        return Err(HenonError::SectorRefused(format!(
            "sector is seeded by degree {} but the bifurcation point has k = {}",
            sector.base_degree, start.k
        )));
    }
    let family = ParamFamily::new(start.n, start.p)?;
    let sys = GalerkinSystem::new(family, start.eps, sector, start.alpha_k_eps, cfg.galerkin)?;
    let bif = discrete_bifurcation(&sys, start.alpha_k_eps, 0.1 * cfg.tol)?;
    Ok(continue_from(sys, &bif, start.alpha_k_eps, cfg))
}

/// Continuation from an already located discrete bifurcation point.
pub fn continue_from(
    sys: GalerkinSystem,
    bif: &DiscreteBifurcation,
    locator_alpha: f64,
    cfg: &ContinuationConfig,
) -> Branch {
    let n = sys.dof();
    let k = sys.base_mode();
    let mut x0 = bif.radial.clone();
    x0.push(bif.alpha);
    let res0 = sys.residual_norm(&bif.radial, bif.alpha).unwrap_or(f64::NAN);
    let mut branch = Branch {
        sector: sys.basis.sector,
        n: sys.family.n,
        p: sys.family.p,
        eps: sys.eps,
        grid: sys.grid.clone(),
        degrees: sys.basis.degrees.clone(),
        bifurcation_alpha: bif.alpha,
        locator_alpha,
        tol: cfg.tol,
        states: vec![make_state(&sys, &x0, 0.0, 0.0, res0, 0)],
        events: Vec::new(),
        termination: None,
        system: sys.clone(),
    };
    let mut tau = vec![0.0; n + 1];
    for (i, v) in bif.null_mode.iter().enumerate() {
        tau[sys.index(i, k)] = cfg.direction * v * sys.u_scale;
    }
    let norm = extended_norm(&sys, &tau);
    tau.iter_mut().for_each(|v| *v /= norm);

    let mut prev = x0;
    let mut prev_dalpha = 0.0f64;
    let mut s = cfg.seed_offset();
    let mut ds = cfg.ds;
    let mut halvings = 0;
    let mut arclength = 0.0;
    while branch.states.len() <= cfg.steps {
        let pred: Vec<f64> = prev.iter().zip(&tau).map(|(a, t)| a + s * t).collect();
        let mut attempt = correct(&sys, &pred, &prev, &tau, s, cfg);
        if branch.states.len() == 1 {
            attempt = refine_seed(&sys, attempt, &prev, &mut tau, s, cfg);
        }
        match attempt {
            Ok((x, res, iters)) => {
                match sys.min_shifted_value(&x[..n], x[n]) {
                    Ok((r, m)) if m <= 0.0 => {
                        branch.termination = Some(HenonError::PositivityLost { r, min_value: m });
                        break;
                    }
                    Err(e) => {
                        branch.termination = Some(e);
                        break;
                    }
                    _ => {}
                }
                let step = diff(&x, &prev);
                let len = extended_norm(&sys, &step);
                arclength += len;
                let dalpha = x[n] - prev[n];
                if prev_dalpha != 0.0 && dalpha != 0.0 && dalpha.signum() != prev_dalpha.signum() {
                    branch.events.push(BranchEvent::FoldSuspected { index: branch.states.len(), alpha: x[n] });
                }
                prev_dalpha = dalpha;
                branch.states.push(make_state(&sys, &x, arclength, s, res, iters));
                tau = step.iter().map(|v| v / len).collect();
                prev = x;
                if branch.states.len() > 2 && iters <= 3 {
                    ds = (2.0 * ds).min(cfg.ds_max);
                }
                s = ds;
                halvings = 0;
            }
            Err(_) => {
                branch.events.push(BranchEvent::StepRejected { index: branch.states.len(), ds: s });
                halvings += 1;
                s *= 0.5;
                if halvings > cfg.max_halvings || s < cfg.ds_min.min(cfg.seed_offset()) {
                    branch.termination = Some(HenonError::CorrectorDiverged { halvings: halvings - 1, ds: s });
                    break;
                }
                if branch.states.len() > 1 {
                    ds = s;
                }
            }
        }
    }
    branch
}
