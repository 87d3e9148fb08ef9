//! A posteriori checks on non-radial states: residual, non-radiality,
//! decay of the angular mean, and distance from the radial solution.

use serde::{Deserialize, Serialize};

use crate::continuation::branch::{Branch, BranchState};
use crate::continuation::family::{explicit_family_constancy, explicit_family_value, family_sector, FAMILY_ALPHA};
use crate::continuation::galerkin::{GalerkinConfig, GalerkinSystem};
use crate::core_model::{approx_radial_solution, beta_boundary, evaluate_bubble, ProblemParams};
use crate::error::Result;
use crate::profile::{log_grid, RadialFunction};
use crate::quadrature::gauss_jacobi;
use crate::radial_solver::{decay_exponent_fit, DecayFit, DecayQuantity};

/// Decay fits count only when the fit window reaches this far out.
const ASYMPTOTIC_WINDOW: f64 = 100.0;
/// Relative tolerance of the decay exponents.
const DECAY_TOL: f64 = 0.05;
/// Angular sample count for oscillation and separation.
const ANGULAR_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub residual: f64,
    pub residual_gate: f64,
    /// Residual re-evaluated with twice the angular points; reported only.
    pub quadrature_residual: Option<f64>,
    pub residual_ok: bool,
    /// `max_r (max_x (u+beta) / min_x (u+beta) - 1)`.
    pub angular_oscillation: f64,
    pub nonradial_ok: bool,
    pub value_fit: Option<DecayFit>,
    pub gradient_fit: Option<DecayFit>,
    /// `None` when the fit window is too short to be asymptotic.
    pub decay_ok: Option<bool>,
    /// Sup distance to the radial solution at the same alpha.
    pub separation: f64,
    pub separation_ok: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn finish(mut self) -> Self {
        if !self.residual_ok {
            self.failures.push(format!("residual {:e} above {:e}", self.residual, self.residual_gate));
        }
        if !self.nonradial_ok {
            self.failures.push(format!("angular oscillation {:e} too small", self.angular_oscillation));
        }
        if self.decay_ok == Some(false) {
            self.failures.push(format!(
                "decay exponents {:?} / {:?} off the predicted rates",
                self.value_fit.map(|f| f.exponent),
                self.gradient_fit.map(|f| f.exponent)
            ));
        }
        if !self.separation_ok {
            self.failures.push(format!("separation {:e} from the radial solution too small", self.separation));
        }
        self
    }
}

fn angular_samples() -> Vec<f64> {
    (0..ANGULAR_SAMPLES).map(|i| -(std::f64::consts::PI * i as f64 / (ANGULAR_SAMPLES - 1) as f64).cos()).collect()
}

fn decay_checks(
    params: &ProblemParams,
    mean: &RadialFunction,
    shift: f64,
) -> (Option<DecayFit>, Option<DecayFit>, Option<bool>) {
    let value = decay_exponent_fit(mean, DecayQuantity::ShiftedValue(shift)).ok();
    let gradient = decay_exponent_fit(mean, DecayQuantity::Gradient).ok();
    let asymptotic = mean.r_max() / 2.0 >= ASYMPTOTIC_WINDOW;
    let ok = match (value, gradient) {
        (Some(v), Some(g)) if asymptotic => {
            let ev = params.value_decay_rate();
            let eg = params.gradient_decay_rate();
            Some((v.exponent + ev).abs() <= DECAY_TOL * ev && (g.exponent + eg).abs() <= DECAY_TOL * eg)
        }
        _ if asymptotic => Some(false),
        _ => None,
    };
    (value, gradient, ok)
}

/// Checks one continued state.
pub fn branch_solution_validate(branch: &Branch, state: &BranchState) -> Result<ValidationReport> {
    let sys = &branch.system;
    let c = branch.coefficients(state);
    let params = sys.params(state.alpha)?;
    let beta = beta_boundary(&params, sys.eps);
    let fine_cfg = GalerkinConfig { angular_points: Some(2 * sys.basis.rule.nodes.len()), ..sys.config };
    let fine = GalerkinSystem::new(sys.family, sys.eps, sys.basis.sector, state.alpha, fine_cfg)?;
    let quadrature_residual = fine.residual_norm(&c, state.alpha)? * fine.source_scale / sys.source_scale;
    let residual = sys.residual_norm(&c, state.alpha)?;
    let residual_gate = branch.tol;

    let xs = angular_samples();
    let radial = sys.solve_radial(state.alpha, 0.1 * branch.tol)?;
    let mut oscillation: f64 = 0.0;
    let mut separation: f64 = 0.0;
    for (i, &r) in sys.grid.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            let u = sys.evaluate(&c, r, x);
            lo = lo.min(u + beta);
            hi = hi.max(u + beta);
            separation = separation.max((u - radial[sys.index(i, 0)]).abs());
        }
        oscillation = oscillation.max(hi / lo - 1.0);
    }
    let mean = RadialFunction::new(sys.grid.clone(), state.amplitudes[0].clone(), 0.0, -params.value_decay_rate())?;
    let (value_fit, gradient_fit, decay_ok) = decay_checks(&params, &mean, beta);
    let floor = 10.0 * branch.tol * sys.u_scale;
    Ok(ValidationReport {
        residual,
        residual_gate,
        quadrature_residual: Some(quadrature_residual),
        residual_ok: residual <= residual_gate,
        angular_oscillation: oscillation,
        nonradial_ok: oscillation > floor / sys.u_scale,
        value_fit,
        gradient_fit,
        decay_ok,
        separation,
        separation_ok: separation > floor,
        failures: Vec::new(),
    }
    .finish())
}

/// Sup distance between each state and the closed-form radial solution at its alpha.
pub fn separation_from_closed_form(branch: &Branch) -> Result<Vec<f64>> {
    let sys = &branch.system;
    let xs = angular_samples();
    branch
        .states
        .iter()
        .map(|s| {
            let params = sys.params(s.alpha)?;
            let c = branch.coefficients(s);
            let mut d: f64 = 0.0;
            for &r in &sys.grid {
                let rad = approx_radial_solution(&params, sys.eps, r)?;
                for &x in &xs {
                    d = d.max((sys.evaluate(&c, r, x) - rad).abs());
                }
            }
            Ok(d)
        })
        .collect()
}

/// The four checks for the explicit whole-space member `u_a` on `|x| <= radius`.
pub fn validate_explicit_family(a: f64, radius: f64) -> Result<ValidationReport> {
    let params = ProblemParams::new(4, 2.0, FAMILY_ALPHA)?;
    let radii = log_grid(0.05, 20.0f64.min(radius), 120);
    let xs = gauss_jacobi(16, 0.0, 0.0).nodes;
    let residual = explicit_family_constancy(a, &radii, &xs);
    let samples = angular_samples();
    let grid = log_grid(1e-3, radius, 2000);
    let mut oscillation: f64 = 0.0;
    let mut separation: f64 = 0.0;
    for &r in &grid {
        let vals: Vec<f64> = samples.iter().map(|&x| explicit_family_value(a, r, x)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        oscillation = oscillation.max(hi / lo - 1.0);
        let u0 = evaluate_bubble(&params, 1.0, r);
        separation = vals.iter().fold(separation, |m, v| m.max((v - u0).abs()));
    }
    let sector = family_sector();
    let (ja, jb) = sector.jacobi_exponents();
    let rule = gauss_jacobi(64, ja, jb);
    let mean_vals: Vec<f64> = grid.iter().map(|&r| rule.integrate(|x| explicit_family_value(a, r, x))).collect();
    let h = 1e-6;
    let mean_ders: Vec<f64> = grid
        .iter()
        .map(|&r| {
            let up = rule.integrate(|x| explicit_family_value(a, r * (1.0 + h), x));
            let dn = rule.integrate(|x| explicit_family_value(a, r * (1.0 - h), x));
            (up - dn) / (2.0 * h * r)
        })
        .collect();
    let mean = RadialFunction::new(grid, mean_vals, 0.0, -params.value_decay_rate())?.with_derivatives(mean_ders)?;
    let (value_fit, gradient_fit, decay_ok) = decay_checks(&params, &mean, 0.0);
    let gate = 1e-6;
    Ok(ValidationReport {
        residual,
        residual_gate: gate,
        quadrature_residual: None,
        residual_ok: residual <= gate,
        angular_oscillation: oscillation,
        nonradial_ok: oscillation > 10.0 * gate,
        value_fit,
        gradient_fit,
        decay_ok,
        separation,
        separation_ok: separation > 10.0 * gate,
        failures: Vec::new(),
    }
    .finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::{locate_alpha_k, BifurcationConfig};
    use crate::continuation::basis::SymmetrySector;
    use crate::continuation::branch::{continue_branch, ContinuationConfig};
    use crate::core_model::ParamFamily;

    #[test]
    fn explicit_member_passes_every_check() {
        let report = validate_explicit_family(0.3, 1e3).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.decay_ok, Some(true));
        let v = report.value_fit.unwrap().exponent;
        let g = report.gradient_fit.unwrap().exponent;
        assert!((v + 2.0).abs() < 0.02 && (g + 3.0).abs() < 0.03, "{v} {g}");
    }

    #[test]
    fn radial_member_is_flagged() {
        let report = validate_explicit_family(0.0, 1e3).unwrap();
        assert!(!report.nonradial_ok && !report.separation_ok);
    }

    #[test]
    fn continued_states_pass_and_the_seed_does_not() {
        let family = ParamFamily::new(5, 3.0).unwrap();
        let pt = locate_alpha_k(&family, 2, 0.1, &BifurcationConfig::default()).unwrap();
        let mut cfg = ContinuationConfig { steps: 5, ..Default::default() };
        cfg.galerkin.elements = 200;
        let branch = continue_branch(&pt, SymmetrySector::zonal(5, 2).unwrap(), &cfg).unwrap();
        let seed = branch_solution_validate(&branch, &branch.states[0]).unwrap();
        assert!(seed.residual_ok);
        assert!(!seed.nonradial_ok && !seed.separation_ok);
        let end = branch_solution_validate(&branch, branch.states.last().unwrap()).unwrap();
        assert!(end.passed(), "{:?}", end.failures);
        assert!(end.decay_ok.is_none());
        let sep = separation_from_closed_form(&branch).unwrap();
        assert_eq!(sep.len(), branch.states.len());
        assert!(sep.last().unwrap() > &sep[0]);
    }
}
