//! Radial Dirichlet problem on `B_{1/eps}` with the shifted nonlinearity
//! `-(r^{N-1}|u'|^{p-2}u')' = r^{N-1+alpha}(u+beta)^{p*-1}`, and the
//! identities and decay laws used to validate radial profiles.

use serde::{Deserialize, Serialize};

use crate::core_model::{
    approx_radial_solution, beta_boundary, evaluate_bubble, evaluate_bubble_derivative, ln_abs_bubble_derivative,
    ln_bubble, ProblemParams,
};
use crate::error::{HenonError, Result};
use crate::harmonics::lambda_k;
use crate::numerics::{derivative_5pt, fit_line, simpson_uniform, sphere_area};
use crate::profile::RadialFunction;

pub const SHOOT_R_MIN: f64 = 1e-6;
pub const SHOOT_LOG_STEP: f64 = 0.005;
/// Scaled strong-form residual a profile must meet before identities are evaluated.
pub const SOLUTION_GATE: f64 = 1e-5;
const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBvp {
    pub params: ProblemParams,
    pub eps: f64,
    pub shift: f64,
    pub r_min: f64,
    pub log_step: f64,
}

impl RadialBvp {
    pub fn new(params: ProblemParams, eps: f64) -> Result<Self> {
        params.check_eps(eps)?;
        Ok(Self { params, eps, shift: beta_boundary(&params, eps), r_min: SHOOT_R_MIN, log_step: SHOOT_LOG_STEP })
    }

    pub fn with_log_step(mut self, h: f64) -> Self {
        self.log_step = h;
        self
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.eps
    }

    /// Node radii: the origin, then a uniform grid in `ln r` from `r_min` to `1/eps`.
    pub fn grid(&self) -> Vec<f64> {
        ball_grid(self.r_min, self.radius(), self.log_step)
    }

    /// The closed-form solution `U_alpha - beta` sampled on [`RadialBvp::grid`].
    pub fn exact_solution(&self) -> Result<RadialFunction> {
        let grid = self.grid();
        let mut values = Vec::with_capacity(grid.len());
        let mut ders = Vec::with_capacity(grid.len());
        for &r in &grid {
            values.push(approx_radial_solution(&self.params, self.eps, r)?);
            ders.push(evaluate_bubble_derivative(&self.params, 1.0, r));
        }
        let last = values.len() - 1;
        values[last] = 0.0;
        RadialFunction::new(grid, values, 0.0, -self.params.value_decay_rate())?.with_derivatives(ders)
    }
}

/// `0` followed by `n+1` radii uniform in `ln r` on `[r_min, r_max]`, `n = ceil(L/h)`.
pub fn ball_grid(r_min: f64, r_max: f64, log_step: f64) -> Vec<f64> {
    let (t0, t1) = (r_min.ln(), r_max.ln());
    let n = ((t1 - t0) / log_step).ceil() as usize;
    let h = (t1 - t0) / n as f64;
    let mut g = Vec::with_capacity(n + 2);
    g.push(0.0);
    g.extend((0..=n).map(|i| (t0 + i as f64 * h).exp()));
    g[1] = r_min;
    g[n + 1] = r_max;
    g
}

/// Result of one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    /// `u(1/eps)`, or a negative value when `u + beta` hit zero first.
    pub end_value: f64,
    /// Radius where `u + beta` vanished, if it did.
    pub crossing: Option<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

fn shoot_rhs(bvp: &RadialBvp, t: f64, u: f64, f: f64) -> Option<(f64, f64)> {
    let p = &bvp.params;
    let v = u + bvp.shift;
    if v <= 0.0 || f < 0.0 {
        return None;
    }
    let n = p.dim();
    let du = -((1.0 + (1.0 - n) / (p.p - 1.0)) * t + f.ln() / (p.p - 1.0)).exp();
    let df = ((n + p.alpha) * t + (p.critical_exponent() - 1.0) * v.ln()).exp();
    Some((du, df))
}

/// `u'` from the flux `F = r^{N-1}|u'|^{p-1}`.
fn slope_from_flux(p: &ProblemParams, r: f64, f: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    -((f.ln() + (1.0 - p.dim()) * r.ln()) / (p.p - 1.0)).exp()
}

/// Integrates from the origin with `u(0) = u0` over the ball grid.
pub fn shoot(bvp: &RadialBvp, u0: f64) -> Result<Shot> {
    let p = &bvp.params;
    let grid = bvp.grid();
    let n = p.dim();
    let v0 = u0 + bvp.shift;
    if !(v0 > 0.0 && u0.is_finite()) {
        return Err(HenonError::InvalidParams(format!("u(0) = {u0} gives non-positive u + beta")));
    }
    let ps = p.critical_exponent();
    let r0 = bvp.r_min;
    let src = v0.powf(ps - 1.0) / (n + p.alpha);
    let mut f = src * r0.powf(n + p.alpha);
    let mut u = u0 - (p.p - 1.0) / (p.p + p.alpha) * src.powf(1.0 / (p.p - 1.0)) * r0.powf(p.profile_power());
    let mut values = vec![u0, u];
    let mut derivatives = vec![0.0, slope_from_flux(p, r0, f)];
    let t_nodes: Vec<f64> = grid[1..].iter().map(|r| r.ln()).collect();
    for w in t_nodes.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let step = |u: f64, f: f64, tt: f64| shoot_rhs(bvp, tt, u, f);
        let k1 = step(u, f, t);
        let k2 = k1.and_then(|k| step(u + 0.5 * h * k.0, f + 0.5 * h * k.1, t + 0.5 * h));
        let k3 = k2.and_then(|k| step(u + 0.5 * h * k.0, f + 0.5 * h * k.1, t + 0.5 * h));
        let k4 = k3.and_then(|k| step(u + h * k.0, f + h * k.1, t + h));
        match (k1, k2, k3, k4) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                u += h / 6.0 * (a.0 + 2.0 * b.0 + 2.0 * c.0 + d.0);
                f += h / 6.0 * (a.1 + 2.0 * b.1 + 2.0 * c.1 + d.1);
            }
            _ => {
                return Ok(Shot {
                    end_value: -bvp.shift.max(f64::MIN_POSITIVE),
                    crossing: Some(t.exp()),
                    values,
                    derivatives,
                });
            }
        }
        if u + bvp.shift <= 0.0 {
            return Ok(Shot {
                end_value: -bvp.shift.max(f64::MIN_POSITIVE),
                crossing: Some(w[1].exp()),
                values,
                derivatives,
            });
        }
        if !u.is_finite() || u.abs() > BLOWUP_FACTOR * u0.abs() {
            return Err(HenonError::Blowup { r: w[1].exp() });
        }
        values.push(u);
        derivatives.push(slope_from_flux(p, w[1].exp(), f));
    }
    Ok(Shot { end_value: u, crossing: None, values, derivatives })
}

/// Shooting on `u(0)`: bisection until `u(1/eps) = 0`, bracket grown
/// geometrically around `u0_guess` on the decreasing branch of `u0 -> u(1/eps)`.
pub fn solve_radial_shooting(bvp: &RadialBvp, u0_guess: f64) -> Result<RadialFunction> {
    Ok(solve_radial_shooting_bracket(bvp, 0.5 * u0_guess, 2.0 * u0_guess)?.1)
}

/// Shooting from an explicit initial bracket `[lo, hi]`; returns `u(0)` and the profile.
pub fn solve_radial_shooting_bracket(bvp: &RadialBvp, lo: f64, hi: f64) -> Result<(f64, RadialFunction)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(HenonError::InvalidParams(format!("bad shooting bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = shoot(bvp, lo)?.end_value;
    let mut fhi = shoot(bvp, hi)?.end_value;
    let mut tries = 0;
    while !(flo > 0.0 && fhi < 0.0) {
        if flo <= 0.0 {
            lo *= 0.5;
            flo = shoot(bvp, lo)?.end_value;
        }
        if fhi >= 0.0 {
            hi *= 2.0;
            fhi = shoot(bvp, hi)?.end_value;
        }
        tries += 1;
        if tries > 40 {
            return Err(HenonError::ShootBracketFailed { lo, hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = shoot(bvp, mid)?.end_value;
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u0 = if flo.abs() < fhi.abs() { lo } else { hi };
    let shot = shoot(bvp, u0)?;
    if shot.crossing.is_some() {
        let shot_lo = shoot(bvp, lo)?;
        return finish(bvp, lo, shot_lo);
    }
    finish(bvp, u0, shot)
}

fn finish(bvp: &RadialBvp, u0: f64, shot: Shot) -> Result<(f64, RadialFunction)> {
    let grid = bvp.grid();
    if shot.values.len() != grid.len() {
        return Err(HenonError::ShootBracketFailed { lo: u0, hi: u0 });
    }
    let prof = RadialFunction::new(grid, shot.values, 0.0, -bvp.params.value_decay_rate())?
        .with_derivatives(shot.derivatives)?;
    Ok((u0, prof))
}

/// Central derivative of `f` at `t` from a 7-point stencil of spacing `d`.
pub fn central_derivative<F: Fn(f64) -> f64>(f: F, t: f64, d: f64) -> f64 {
    (-f(t - 3.0 * d) + 9.0 * f(t - 2.0 * d) - 45.0 * f(t - d) + 45.0 * f(t + d) - 9.0 * f(t + 2.0 * d) + f(t + 3.0 * d))
        / (60.0 * d)
}

/// Scaled strong-form residual of `U_{lambda,alpha}` at radius `r`. With
/// `F = r^{N-1}|U'|^{p-1}` and `t = ln r` the equation reads
/// `F (N-1) + F (p-1) d ln|U'|/dt = r^{N+alpha} U^{p*-1}`; the residual is
/// divided by the largest of the three terms.
pub fn bubble_residual(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    let n = params.dim();
    let t = r.ln();
    let ln_du = |s: f64| ln_abs_bubble_derivative(params, lambda, s.exp());
    let flux = ((n - 1.0) * t + (params.p - 1.0) * ln_du(t)).exp();
    let a1 = flux * (n - 1.0);
    let a2 = flux * (params.p - 1.0) * central_derivative(ln_du, t, 2e-3);
    let src = ((n + params.alpha) * t + (params.critical_exponent() - 1.0) * ln_bubble(params, lambda, r)).exp();
    (a1 + a2 - src).abs() / a1.abs().max(a2.abs()).max(src)
}

/// Scaled residual of the mode-`k` linearized equation
/// `-((p-1) r^{N-1}|U'|^{p-2} v')' + lambda_k r^{N-3}|U'|^{p-2} v = (p*-1) r^{N-1+alpha} U^{p*-2} v`
/// for the radial factor `v`, given with its derivative `v_t` in `ln r`. In `t = ln r` with `G = r^{N-2}|U'|^{p-2}` the
/// terms are `(p-1)G(g v_t + v_tt)`, `lambda_k G v` and the source, `g = d ln G/dt`;
/// the residual is divided by the largest of them.
pub fn linearized_residual<F, D>(params: &ProblemParams, k: u32, v: F, v_t: D, r: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let n = params.dim();
    let p = params.p;
    let d = 2e-3;
    let ln_g = |t: f64| (n - 2.0) * t + (p - 2.0) * ln_abs_bubble_derivative(params, 1.0, t.exp());
    let vt = |t: f64| v_t(t.exp());
    let t = r.ln();
    let big_g = ln_g(t).exp();
    let g = central_derivative(ln_g, t, d);
    let a1 = (p - 1.0) * big_g * g * vt(t);
    let a2 = (p - 1.0) * big_g * central_derivative(vt, t, d);
    let vr = v(r);
    let b = lambda_k(k, params.n) as f64 * big_g * vr;
    let c = (params.critical_exponent() - 1.0)
        * ((n + params.alpha) * t + (params.critical_exponent() - 2.0) * ln_bubble(params, 1.0, r)).exp()
        * vr;
    (-a1 - a2 + b - c).abs() / a1.abs().max(a2.abs()).max(b.abs()).max(c.abs())
}

/// Max over interior nodes of the scaled residual
/// `|dF/dt - r^{N+alpha}(u+beta)^{p*-1}| / max((N-1)F, |dF/dt|, source)` with the
/// flux `F = -r^{N-1}|u'|^{p-2}u'`, differenced in `ln r` on the positive nodes.
/// `(N-1)F` is the size of the first-order term of the expanded operator.
pub fn pde_residual(params: &ProblemParams, f: &RadialFunction, shift: f64) -> f64 {
    let n = params.dim();
    let start = if f.grid[0] == 0.0 { 1 } else { 0 };
    let r = &f.grid[start..];
    let u = &f.values[start..];
    let t: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let du: Vec<f64> = match &f.derivatives {
        Some(d) => d[start..].to_vec(),
        None => derivative_5pt(&t, u).iter().zip(r).map(|(d, x)| d / x).collect(),
    };
    let flux: Vec<f64> = r.iter().zip(&du).map(|(x, d)| x.powf(n - 1.0) * d.abs().powf(params.p - 1.0)).collect();
    let dflux = derivative_5pt(&t, &flux);
    let ps = params.critical_exponent();
    let m = r.len();
    let mut worst = 0.0f64;
    for i in 2..m.saturating_sub(2) {
        let v = u[i] + shift;
        let src = if v > 0.0 { ((n + params.alpha) * t[i] + (ps - 1.0) * v.ln()).exp() } else { 0.0 };
        let scale = dflux[i].abs().max(src).max((n - 1.0) * flux[i]);
        if scale > 0.0 {
            worst = worst.max((dflux[i] - src).abs() / scale);
        }
    }
    worst
}

fn require_solution(params: &ProblemParams, f: &RadialFunction, shift: f64) -> Result<()> {
    let res = pde_residual(params, f, shift);
    if !(res <= SOLUTION_GATE) {
        return Err(HenonError::NotASolution { residual: res, gate: SOLUTION_GATE });
    }
    Ok(())
}

/// `int_0^R r^{N-1+alpha} (u+beta)^q dr` on a ball grid: Simpson in `ln r` plus
/// the flat piece `[0, r_min]`.
fn weighted_source_integral(params: &ProblemParams, f: &RadialFunction, shift: f64, q: f64) -> f64 {
    let (t, h) = log_nodes(f);
    let n = params.dim();
    let vals: Vec<f64> = t
        .iter()
        .zip(&f.values[1..])
        .map(|(tt, u)| {
            let v = (u + shift).max(0.0);
            if v == 0.0 {
                0.0
            } else {
                ((n + params.alpha) * tt + q * v.ln()).exp()
            }
        })
        .collect();
    let origin = (f.values[0] + shift).powf(q) * f.grid[1].powf(n + params.alpha) / (n + params.alpha);
    simpson_uniform(h, &vals) + origin
}

fn log_nodes(f: &RadialFunction) -> (Vec<f64>, f64) {
    let t: Vec<f64> = f.grid[1..].iter().map(|r| r.ln()).collect();
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    (t, h)
}

/// The two sides of the ball Pohozaev identity
/// `(N-p)/p beta int_B |x|^alpha (u+beta)^{p*-1} - R^{N+alpha} beta^{p*} omega / p*
///  = (p-1)/p R int_{dB} |grad u|^p`.
/// `f` must live on a ball grid (origin, then uniform in `ln r` up to `R = 1/eps`).
pub fn pohozaev_ball_sides(params: &ProblemParams, f: &RadialFunction, eps: f64) -> Result<(f64, f64)> {
    params.check_eps(eps)?;
    let beta = beta_boundary(params, eps);
    let (n, p) = (params.dim(), params.p);
    let ps = params.critical_exponent();
    let omega = sphere_area(params.n);
    let big_r = 1.0 / eps;
    let slope = f.derivatives.as_ref().map(|d| d[d.len() - 1]).unwrap_or_else(|| f.eval_derivative(big_r));
    let source = omega * weighted_source_integral(params, f, beta, ps - 1.0);
    let lhs = (n - p) / p * beta * source - big_r.powf(n + params.alpha) * beta.powf(ps) * omega / ps;
    let rhs = (p - 1.0) / p * big_r * omega * big_r.powf(n - 1.0) * slope.abs().powf(p);
    Ok((lhs, rhs))
}

/// Relative mismatch of [`pohozaev_ball_sides`], gated on [`pde_residual`].
pub fn pohozaev_residual_ball(params: &ProblemParams, f: &RadialFunction, eps: f64) -> Result<f64> {
    params.check_eps(eps)?;
    require_solution(params, f, beta_boundary(params, eps))?;
    let (lhs, rhs) = pohozaev_ball_sides(params, f, eps)?;
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()))
}

/// Relative mismatch of the energy identity
/// `int_B |grad u|^p + beta int_{dB} |grad u|^{p-1} = int_B |x|^alpha (u+beta)^{p*}`.
pub fn energy_identity_residual(params: &ProblemParams, f: &RadialFunction, eps: f64) -> Result<f64> {
    params.check_eps(eps)?;
    let beta = beta_boundary(params, eps);
    let (n, p) = (params.dim(), params.p);
    let ps = params.critical_exponent();
    let omega = sphere_area(params.n);
    let big_r = 1.0 / eps;
    let ders = f
        .derivatives
        .clone()
        .ok_or_else(|| HenonError::InvalidParams("energy identity needs derivative samples".into()))?;
    let (t, h) = log_nodes(f);
    let grad: Vec<f64> = t
        .iter()
        .zip(&ders[1..])
        .map(|(tt, d)| if *d == 0.0 { 0.0 } else { (n * tt + p * d.abs().ln()).exp() })
        .collect();
    let lhs = omega * simpson_uniform(h, &grad)
        + beta * omega * big_r.powf(n - 1.0) * ders[ders.len() - 1].abs().powf(p - 1.0);
    let rhs = omega * weighted_source_integral(params, f, beta, ps);
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()))
}

/// Boundary mismatch of the two-solution Pohozaev combination on the sphere
/// `|x| = r0`, `r0 = (p-1)^{(p-1)/(p+alpha)}` by default:
/// `omega r0^{N-1} [ r0(|u'|^p - |v'|^p) + (N-p)/p (|u'|^{p-2}u'(u+beta) - |v'|^{p-2}v'(v+beta))
///  - (r0/p)(|u'|^p - |v'|^p) ]`.
pub fn pohozaev_residual_annulus(
    params: &ProblemParams,
    u: &RadialFunction,
    v: &RadialFunction,
    shift: f64,
    r0: Option<f64>,
) -> f64 {
    let r = r0.unwrap_or_else(|| crate::core_model::kernel_z_root(params));
    let (n, p) = (params.dim(), params.p);
    let (uu, du) = (u.eval(r), u.eval_derivative(r));
    let (vv, dv) = (v.eval(r), v.eval_derivative(r));
    let flux = |d: f64| d.abs().powf(p - 2.0) * d;
    let t1 = r * (du.abs().powf(p) - dv.abs().powf(p));
    let t2 = (n - p) / p * (flux(du) * (uu + shift) - flux(dv) * (vv + shift));
    let rhs = r / p * (du.abs().powf(p) - dv.abs().powf(p));
    sphere_area(params.n) * r.powf(n - 1.0) * (t1 + t2 - rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayQuantity {
    Value,
    /// `u + shift`; the natural quantity for truncated profiles `U - beta`.
    ShiftedValue(f64),
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of `ln|q|` against `ln r` on `[R/100, R/2]`.
pub fn decay_exponent_fit(f: &RadialFunction, which: DecayQuantity) -> Result<DecayFit> {
    let big_r = f.r_max();
    decay_exponent_fit_window(f, which, big_r / 100.0, big_r / 2.0)
}

pub fn decay_exponent_fit_window(f: &RadialFunction, which: DecayQuantity, lo: f64, hi: f64) -> Result<DecayFit> {
    let q: Vec<f64> = match which {
        DecayQuantity::Value => f.values.clone(),
        DecayQuantity::ShiftedValue(s) => f.values.iter().map(|v| v + s).collect(),
        DecayQuantity::Gradient => match &f.derivatives {
            Some(d) => d.clone(),
            None => (0..f.len()).map(|i| f.eval_derivative(f.grid[i])).collect(),
        },
    };
    let idx: Vec<usize> = (0..f.len()).filter(|&i| f.grid[i] >= lo && f.grid[i] <= hi && q[i] != 0.0).collect();
    if idx.len() < 50 {
        return Err(HenonError::WindowTooSmall { points: idx.len(), required: 50 });
    }
    let x: Vec<f64> = idx.iter().map(|&i| f.grid[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| q[i].abs().ln()).collect();
    let fit = fit_line(&x, &y);
    Ok(DecayFit {
        exponent: fit.slope,
        constant: fit.intercept.exp(),
        r_squared: fit.r_squared,
        window: (lo, hi),
        points: idx.len(),
    })
}

/// `max_i |q(r_i)| (1 + r_i)^{exponent}`: the smallest `C` with `|q| <= C(1+r)^{-exponent}`.
pub fn comparison_constant(f: &RadialFunction, which: DecayQuantity, exponent: f64) -> f64 {
    (0..f.len())
        .map(|i| {
            let q = match which {
                DecayQuantity::Value => f.values[i],
                DecayQuantity::ShiftedValue(s) => f.values[i] + s,
                DecayQuantity::Gradient => f.derivatives.as_ref().map(|d| d[i]).unwrap_or(0.0),
            };
            q.abs() * (1.0 + f.grid[i]).powf(exponent)
        })
        .fold(0.0, f64::max)
}

/// The whole-space bubble `U_{lambda,alpha}` sampled on `grid` with exact derivatives.
pub fn sample_bubble(params: &ProblemParams, lambda: f64, grid: Vec<f64>) -> Result<RadialFunction> {
    let vals = grid.iter().map(|&r| evaluate_bubble(params, lambda, r)).collect();
    let ders = grid.iter().map(|&r| evaluate_bubble_derivative(params, lambda, r)).collect();
    RadialFunction::new(grid, vals, 0.0, -params.value_decay_rate())?.with_derivatives(ders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::{kernel_z, kernel_z_dt, kernel_z_root, talenti_constant};
    use approx::assert_relative_eq;

    fn pp(n: u32, p: f64, a: f64) -> ProblemParams {
        ProblemParams::new(n, p, a).unwrap()
    }

    #[test]
    fn bubble_residual_is_tiny() {
        for &(n, p, a) in &[(4u32, 2.0, 2.0), (3, 1.5, 0.5), (6, 2.5, 2.0)] {
            let params = pp(n, p, a);
            for i in 0..200 {
                let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
                let res = bubble_residual(&params, 1.0, r);
                assert!(res < 1e-9, "{n} {p} {a} r={r} res={res}");
            }
        }
    }

    #[test]
    fn kernel_z_solves_radial_linearization() {
        let params = pp(5, 3.0, 1.0);
        for i in 0..30 {
            let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 29.0);
            let res = linearized_residual(&params, 0, |s| kernel_z(&params, s), |s| kernel_z_dt(&params, s), r);
            assert!(res < 1e-8, "r={r} res={res}");
        }
        // a non-kernel function fails
        assert!(
            linearized_residual(&params, 0, |s| (1.0 + s * s).recip(), |s| -2.0 * s * s / (1.0 + s * s).powi(2), 1.0)
                > 1e-3
        );
    }

    #[test]
    fn exact_solution_passes_identities() {
        let params = pp(4, 2.0, 2.0);
        let bvp = RadialBvp::new(params, 0.05).unwrap();
        let exact = bvp.exact_solution().unwrap();
        assert!(pde_residual(&params, &exact, bvp.shift) < 1e-7);
        assert!(pohozaev_residual_ball(&params, &exact, 0.05).unwrap() < 1e-8);
        assert!(energy_identity_residual(&params, &exact, 0.05).unwrap() < 1e-8);
    }

    #[test]
    fn shooting_recovers_the_closed_form() {
        let params = pp(4, 2.0, 2.0);
        let bvp = RadialBvp::new(params, 0.05).unwrap();
        let sol = solve_radial_shooting(&bvp, 1.0).unwrap();
        let exact = bvp.exact_solution().unwrap();
        let err = sol.values.iter().zip(&exact.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6, "sup error {err}");
        assert_relative_eq!(sol.values[0], talenti_constant(&params) - bvp.shift, max_relative = 1e-7);
        assert!(sol.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(pde_residual(&params, &sol, bvp.shift) < 1e-6);
    }

    #[test]
    fn perturbed_profile_fails_the_residual() {
        let params = pp(4, 2.0, 2.0);
        let bvp = RadialBvp::new(params, 0.05).unwrap();
        let exact = bvp.exact_solution().unwrap();
        let mut pert = exact.clone();
        let dz: Vec<f64> = pert
            .grid
            .iter()
            .map(|&r| {
                let h = 1e-6 * (1.0 + r);
                (kernel_z(&params, r + h) - kernel_z(&params, (r - h).max(0.0))) / (r + h - (r - h).max(0.0))
            })
            .collect();
        for i in 0..pert.len() {
            pert.values[i] += 0.01 * kernel_z(&params, pert.grid[i]);
            pert.derivatives.as_mut().unwrap()[i] += 0.01 * dz[i];
        }
        assert!(pde_residual(&params, &pert, bvp.shift) > 10.0 * SOLUTION_GATE);
        assert!(matches!(pohozaev_residual_ball(&params, &pert, 0.05), Err(HenonError::NotASolution { .. })));
    }

    #[test]
    fn annulus_mismatch_vanishes_for_equal_profiles() {
        let params = pp(5, 3.0, 1.0);
        let bvp = RadialBvp::new(params, 0.1).unwrap();
        let exact = bvp.exact_solution().unwrap();
        assert_eq!(pohozaev_residual_annulus(&params, &exact, &exact, bvp.shift, None), 0.0);
        assert!(kernel_z(&params, kernel_z_root(&params)).abs() < 1e-12);
    }

    #[test]
    fn decay_fits() {
        let params = pp(4, 2.0, 2.0);
        let grid = crate::profile::log_grid_with_origin(1e-4, 1e3, 2000);
        let b = sample_bubble(&params, 1.0, grid).unwrap();
        let fv = decay_exponent_fit(&b, DecayQuantity::Value).unwrap();
        let fg = decay_exponent_fit(&b, DecayQuantity::Gradient).unwrap();
        assert!((fv.exponent + 2.0).abs() < 0.02);
        assert!((fg.exponent + 3.0).abs() < 0.03);
        let short = RadialFunction::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.2], 0.0, 0.0).unwrap();
        assert!(matches!(decay_exponent_fit(&short, DecayQuantity::Value), Err(HenonError::WindowTooSmall { .. })));
    }
    fn kernel_perturbation(params: &ProblemParams, base: &RadialFunction, t: f64) -> RadialFunction {
        let mut v = base.clone();
        for i in 0..v.len() {
            let r = v.grid[i];
            v.values[i] += t * kernel_z(params, r);
            let dz = if r > 0.0 { kernel_z_dt(params, r) / r } else { 0.0 };
            v.derivatives.as_mut().unwrap()[i] += t * dz;
        }
        v
    }

    #[test]
    fn annulus_mismatch_is_second_order_along_the_kernel() {
        let params = pp(5, 3.0, 1.0);
        let bvp = RadialBvp::new(params, 0.1).unwrap();
        let exact = bvp.exact_solution().unwrap();
        let m = |t: f64| {
            pohozaev_residual_annulus(&params, &exact, &kernel_perturbation(&params, &exact, t), bvp.shift, None).abs()
        };
        let slope = (m(1e-3).ln() - m(1e-4).ln()) / 10f64.ln();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn shooting_is_unique_across_brackets() {
        let params = pp(4, 2.0, 2.0);
        let bvp = RadialBvp::new(params, 0.05).unwrap();
        let c = talenti_constant(&params);
        let (a, _) = solve_radial_shooting_bracket(&bvp, 0.3 * c, 0.6 * c).unwrap();
        let (b, _) = solve_radial_shooting_bracket(&bvp, 1.1 * c, 3.0 * c).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn shooting_handles_degenerate_and_singular_p() {
        for &(n, p, a, eps) in &[(5u32, 3.0, 1.0, 0.1), (3, 1.5, 0.5, 0.2)] {
            let params = pp(n, p, a);
            let bvp = RadialBvp::new(params, eps).unwrap();
            let sol = solve_radial_shooting(&bvp, talenti_constant(&params)).unwrap();
            let exact = bvp.exact_solution().unwrap();
            let err = sol.values.iter().zip(&exact.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-6, "{n} {p} {a}: {err}");
            assert!(pohozaev_residual_ball(&params, &sol, eps).unwrap() < 1e-5);
            assert!(energy_identity_residual(&params, &sol, eps).unwrap() < 1e-8);
        }
    }

    #[test]
    fn pohozaev_sides_scale_together() {
        let params = pp(4, 2.0, 2.0);
        let sides = |eps: f64| {
            let exact = RadialBvp::new(params, eps).unwrap().exact_solution().unwrap();
            pohozaev_ball_sides(&params, &exact, eps).unwrap()
        };
        let (l1, r1) = sides(0.1);
        let (l2, r2) = sides(0.05);
        assert_relative_eq!(l1 / l2, r1 / r2, max_relative = 1e-8);
    }

    #[test]
    fn comparison_constants_are_uniform_in_eps() {
        let params = pp(5, 3.0, 1.0);
        let mut cs = Vec::new();
        let mut gs = Vec::new();
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let bvp = RadialBvp::new(params, eps).unwrap();
            let sol = solve_radial_shooting(&bvp, talenti_constant(&params)).unwrap();
            cs.push(comparison_constant(&sol, DecayQuantity::Value, params.value_decay_rate()));
            gs.push(comparison_constant(&sol, DecayQuantity::Gradient, params.gradient_decay_rate()));
        }
        let ratio = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio(&cs) < 3.0);
        assert!(ratio(&gs) < 3.0);
    }

    #[test]
    fn truncated_profile_decay() {
        let params = pp(4, 2.0, 0.0);
        let bvp = RadialBvp::new(params, 1e-3).unwrap();
        let sol = solve_radial_shooting(&bvp, talenti_constant(&params)).unwrap();
        let fv = decay_exponent_fit(&sol, DecayQuantity::ShiftedValue(bvp.shift)).unwrap();
        let fg = decay_exponent_fit(&sol, DecayQuantity::Gradient).unwrap();
        assert!((fv.exponent / -params.value_decay_rate() - 1.0).abs() < 0.02);
        assert!((fg.exponent / -params.gradient_decay_rate() - 1.0).abs() < 0.02);
    }

    proptest::proptest! {
        #[test]
        fn bubble_residual_random_params(n in 3u32..8, pf in 0.05f64..0.95, a in 0.0f64..6.0, lr in -3.0f64..3.0, ll in -1.0f64..1.0) {
            let p = 1.0 + pf * (n as f64 - 1.0);
            let params = pp(n, p, a);
            proptest::prop_assert!(bubble_residual(&params, 10f64.powf(ll), 10f64.powf(lr)) < 1e-8);
        }
    }
}
