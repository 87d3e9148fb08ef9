//! The explicit non-radial family of the linear case `N = 4`, `p = 2`,
//! `alpha = 2` on the `O(2) x O(2)` sector:
//! `u_a = 12^{1/4} (1 + |x|^4 - 2a(|x'|^2 - |x''|^2) + a^2)^{-1/2}`,
//! which solves `-Delta u = |x|^2 u^5` on all of `R^4`.

use serde::{Deserialize, Serialize};

use crate::continuation::basis::SymmetrySector;
use crate::continuation::branch::{Branch, BranchState};
use crate::continuation::galerkin::GalerkinSystem;
use crate::core_model::beta_boundary;
use crate::error::{HenonError, Result};
use crate::numerics::{fd_weights, max_abs};

pub const FAMILY_N: u32 = 4;
pub const FAMILY_P: f64 = 2.0;
pub const FAMILY_ALPHA: f64 = 2.0;

/// Projection rule size for the family's mode profiles.
const PROJECTION_POINTS: usize = 64;

pub fn family_sector() -> SymmetrySector {
    SymmetrySector::product(FAMILY_N, 2, 2).expect("l = 2, k = 2 is admissible in R^4")
}

/// `u_a(r, x)` in the reduced coordinates of [`family_sector`].
pub fn explicit_family_value(a: f64, r: f64, x: f64) -> f64 {
    let r2 = r * r;
    12f64.powf(0.25) / (1.0 + r2 * r2 + 2.0 * a * r2 * x + a * a).sqrt()
}

/// Laplacian of a sector-invariant field by twelfth-order central differences
/// in the reduced coordinates.
pub fn reduced_laplacian<F: Fn(f64, f64) -> f64>(sector: &SymmetrySector, f: F, r: f64, x: f64) -> f64 {
    let hr = (0.15 * r).min(0.03 * r.max(1.0));
    let hx = 0.1;
    let offsets: Vec<f64> = (-6..=6).map(|j| j as f64).collect();
    let w1 = fd_weights(0.0, &offsets, 1);
    let w2 = fd_weights(0.0, &offsets, 2);
    let (mut ur, mut urr, mut ux, mut uxx) = (0.0, 0.0, 0.0, 0.0);
    for (j, o) in offsets.iter().enumerate() {
        let vr = f(r + o * hr, x);
        let vx = f(r, x + o * hx);
        ur += w1[j] * vr;
        urr += w2[j] * vr;
        ux += w1[j] * vx;
        uxx += w2[j] * vx;
    }
    ur /= hr;
    urr /= hr * hr;
    ux /= hx;
    uxx /= hx * hx;
    let (a, b) = sector.jacobi_exponents();
    let n = sector.n as f64;
    let angular = sector.sigma() * ((1.0 - x * x) * uxx + (b - a - (a + b + 2.0) * x) * ux);
    urr + (n - 1.0) * ur / r + angular / (r * r)
}

/// `max/min - 1` of `(-Delta u_a) / (|x|^2 u_a^5)` over the points `(r, x)`.
pub fn explicit_family_constancy(a: f64, radii: &[f64], xs: &[f64]) -> f64 {
    let sector = family_sector();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in radii {
        for &x in xs {
            let lap = reduced_laplacian(&sector, |r, x| explicit_family_value(a, r, x), r, x);
            let u = explicit_family_value(a, r, x);
            let ratio = -lap / (r * r * u.powi(5));
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    hi / lo - 1.0
}

/// Mode coefficients of `u_a` at the nodes of `sys`.
pub fn explicit_family_modes(sys: &GalerkinSystem, a: f64) -> Vec<f64> {
    sys.project(|r, x| explicit_family_value(a, r, x), PROJECTION_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMatch {
    /// Family parameter with the same signed base-mode defect.
    pub a: f64,
    pub defect: f64,
    /// Relative sup error of `c_0 + beta` against the family's mode-0 profile.
    pub mode0_error: f64,
    /// Relative sup error of the base-mode profile.
    pub base_error: f64,
}

fn family_defect(sys: &GalerkinSystem, a: f64) -> (f64, f64) {
    let c = explicit_family_modes(sys, a);
    let amp = sys.amplitude(&c, sys.base_mode());
    let i =
        amp.iter().enumerate().max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap()).map(|(i, _)| i).unwrap_or(0);
    (amp[i].abs(), amp[i])
}

/// Compares a branch state of the family problem with the member `u_a` of equal defect.
pub fn match_explicit_family(branch: &Branch, state: &BranchState) -> Result<FamilyMatch> {
    let sys = &branch.system;
    if sys.family.n != FAMILY_N || sys.family.p != FAMILY_P || sys.basis.sector != family_sector() {
        return Err(HenonError::InvalidParams("family matching needs N = 4, p = 2 on the l = 2 sector".into()));
    }
    let target = state.symmetry_defect;
    if target <= 0.0 {
        return Err(HenonError::InvalidParams("state has no symmetry defect".into()));
    }
    let orientation = family_defect(sys, 1e-3).1.signum();
    let sign = state.signed_defect.signum() * orientation;
    let (mut lo, mut hi) = (0.0, 1.0);
    if family_defect(sys, hi).0 < target {
        return Err(HenonError::BracketFailed { samples: vec![(hi, family_defect(sys, hi).0 - target)] });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if family_defect(sys, mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = sign * 0.5 * (lo + hi);
    let fam = explicit_family_modes(sys, a);
    let params = sys.params(state.alpha)?;
    let beta = beta_boundary(&params, sys.eps);
    let k = sys.base_mode();
    let f0 = sys.amplitude(&fam, 0);
    let fk = sys.amplitude(&fam, k);
    let s0: Vec<f64> = state.amplitudes[0].iter().zip(&f0).map(|(c, f)| c + beta - f).collect();
    let sk: Vec<f64> = state.amplitudes[k].iter().zip(&fk).map(|(c, f)| c - f).collect();
    Ok(FamilyMatch {
        a,
        defect: target,
        mode0_error: max_abs(&s0) / max_abs(&f0),
        base_error: max_abs(&sk) / max_abs(&fk),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::{evaluate_bubble, ProblemParams};

    #[test]
    fn zero_member_is_the_bubble() {
        let params = ProblemParams::new(4, 2.0, 2.0).unwrap();
        for &r in &[0.0, 0.3, 1.0, 4.0] {
            let u = explicit_family_value(0.0, r, 0.4);
            assert!((u - evaluate_bubble(&params, 1.0, r)).abs() < 1e-13 * u);
        }
    }

    #[test]
    fn family_solves_the_equation_with_constant_ratio() {
        let radii: Vec<f64> = (0..40).map(|i| 0.05 * 1.15f64.powi(i)).collect();
        let xs = [-0.95, -0.5, 0.0, 0.3, 0.8, 0.99];
        for &a in &[0.1, 0.3] {
            let c = explicit_family_constancy(a, &radii, &xs);
            assert!(c < 1e-7, "a = {a}: {c:e}");
        }
        // a radial profile that is not a solution has a varying ratio
        let sector = family_sector();
        let f = |r: f64, _x: f64| 1.0 / (1.0 + r * r);
        let r1 = -reduced_laplacian(&sector, f, 0.5, 0.0) / (0.25 * f(0.5, 0.0).powi(5));
        let r2 = -reduced_laplacian(&sector, f, 3.0, 0.0) / (9.0 * f(3.0, 0.0).powi(5));
        assert!((r1 / r2 - 1.0).abs() > 0.1);
    }

    #[test]
    fn mirror_maps_a_to_minus_a() {
        for &(r, x) in &[(0.7, 0.2), (1.3, -0.9)] {
            let u = explicit_family_value(0.3, r, x);
            assert!((u - explicit_family_value(-0.3, r, -x)).abs() < 1e-15);
        }
    }
}
