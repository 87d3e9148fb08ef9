//! Problem parameters and the closed-form radial objects: the bubble family,
//! its truncation to a ball, and the kernel and eigenfunction profiles of the
//! linearized operator.

use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::harmonics::{alpha_crit, lambda_k};
use crate::numerics::softplus;

/// Relative tolerance for treating `alpha` as equal to a critical exponent.
pub const CRITICAL_ALPHA_TOL: f64 = 1e-9;

/// The triple `(N, p, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub p: f64,
    pub alpha: f64,
}

impl ProblemParams {
    pub fn new(n: u32, p: f64, alpha: f64) -> Result<Self> {
        let params = Self { n, p, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(HenonError::InvalidParams(format!("N = {} must be at least 2", self.n)));
        }
        if !(self.p.is_finite() && self.p > 1.0 && self.p < self.n as f64) {
            return Err(HenonError::InvalidParams(format!("p = {} must satisfy 1 < p < N = {}", self.p, self.n)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(HenonError::InvalidParams(format!("alpha = {} must be >= 0", self.alpha)));
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n, self.p, alpha)
    }

    pub fn family(&self) -> ParamFamily {
        ParamFamily { n: self.n, p: self.p }
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    pub fn critical_exponent(&self) -> f64 {
        self.p * (self.dim() + self.alpha) / (self.dim() - self.p)
    }

    /// `M = p(N+alpha)/(p+alpha)`, the effective dimension after the change of variable.
    pub fn transformed_dimension(&self) -> f64 {
        self.p * (self.dim() + self.alpha) / (self.p + self.alpha)
    }

    /// `q = p/(p+alpha)`.
    pub fn q(&self) -> f64 {
        self.p / (self.p + self.alpha)
    }

    /// Power `(p+alpha)/(p-1)` appearing inside every closed form.
    pub fn profile_power(&self) -> f64 {
        (self.p + self.alpha) / (self.p - 1.0)
    }

    /// `(N-p)/(p-1)`: decay rate of the bubble.
    pub fn value_decay_rate(&self) -> f64 {
        (self.dim() - self.p) / (self.p - 1.0)
    }

    /// `(N-1)/(p-1)`: decay rate of the bubble's gradient.
    pub fn gradient_decay_rate(&self) -> f64 {
        (self.dim() - 1.0) / (self.p - 1.0)
    }

    /// Upper end of the admissible ball parameters, `(p-1)^{-(p-1)/(p+alpha)}`.
    pub fn max_eps(&self) -> f64 {
        (self.p - 1.0).powf(-(self.p - 1.0) / (self.p + self.alpha))
    }

    pub fn check_eps(&self, eps: f64) -> Result<()> {
        let bound = self.max_eps();
        if eps.is_finite() && eps > 0.0 && eps < bound {
            Ok(())
        } else {
            Err(HenonError::InadmissibleEps { eps, bound })
        }
    }

    /// `B = (p-2)(N+alpha) + N - p`, the first-order coefficient of the
    /// indicial equation at the origin.
    pub fn indicial_b(&self) -> f64 {
        (self.p - 2.0) * (self.dim() + self.alpha) + self.dim() - self.p
    }
}

/// The pair `(N, p)` with `alpha` left free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamFamily {
    pub n: u32,
    pub p: f64,
}

impl ParamFamily {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        ProblemParams::new(n, p, 0.0)?;
        Ok(Self { n, p })
    }

    pub fn at(&self, alpha: f64) -> Result<ProblemParams> {
        ProblemParams::new(self.n, self.p, alpha)
    }
}

pub fn critical_exponent(params: &ProblemParams) -> f64 {
    params.critical_exponent()
}

fn ln_talenti(params: &ProblemParams) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let inner = (n + a).ln() + (p - 1.0) * ((n - p) / (p - 1.0)).ln();
    inner * (n - p) / (p * (p + a))
}

/// `C_{N,p,alpha}`, the normalization of the bubble.
pub fn talenti_constant(params: &ProblemParams) -> f64 {
    ln_talenti(params).exp()
}

/// `ln U_{lambda,alpha}(r)`.
pub fn ln_bubble(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let b = (n - p) / (p + a);
    ln_talenti(params) + (n - p) / p * lambda.ln() - b * softplus(params.profile_power() * (lambda * r).ln())
}

/// `U_{lambda,alpha}(r)`.
pub fn evaluate_bubble(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    ln_bubble(params, lambda, r).exp()
}

/// `ln |U'_{lambda,alpha}(r)|` for `r > 0`.
pub fn ln_abs_bubble_derivative(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let pw = params.profile_power();
    let e = (n + a) / (p + a);
    ln_talenti(params) + ((n - p) / p + pw) * lambda.ln() + params.value_decay_rate().ln() + (pw - 1.0) * r.ln()
        - e * softplus(pw * (lambda * r).ln())
}

/// `dU_{lambda,alpha}/dr`.
pub fn evaluate_bubble_derivative(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    -ln_abs_bubble_derivative(params, lambda, r).exp()
}

/// The radial kernel element `Z(r)` of the linearized operator.
pub fn kernel_z(params: &ProblemParams, r: f64) -> f64 {
    let pw = params.profile_power();
    let e = (params.dim() + params.alpha) / (params.p + params.alpha);
    if r == 0.0 {
        return params.p - 1.0;
    }
    let lr = r.ln();
    let s = softplus(pw * lr);
    (params.p - 1.0) * (-e * s).exp() - (pw * lr - e * s).exp()
}

/// `r Z'(r)`, the derivative of `Z` in `ln r`.
pub fn kernel_z_dt(params: &ProblemParams, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let pw = params.profile_power();
    let e = (params.dim() + params.alpha) / (params.p + params.alpha);
    let lr = r.ln();
    let s = softplus(pw * lr);
    let sig = crate::numerics::logistic(pw * lr);
    -(params.p - 1.0) * e * pw * sig * (-e * s).exp() - pw * (1.0 - e * sig) * (pw * lr - e * s).exp()
}

/// Radius where `Z` changes sign, `(p-1)^{(p-1)/(p+alpha)}`.
pub fn kernel_z_root(params: &ProblemParams) -> f64 {
    (params.p - 1.0).powf((params.p - 1.0) / (params.p + params.alpha))
}

/// Whether `alpha` equals `alpha(k)` up to [`CRITICAL_ALPHA_TOL`].
pub fn is_critical(params: &ProblemParams, k: u32) -> bool {
    let ak = alpha_crit(k, params.n, params.p);
    (params.alpha - ak).abs() <= CRITICAL_ALPHA_TOL * (1.0 + ak)
}

/// Radial factor of the degree-`k` kernel elements; only defined at `alpha = alpha(k)`.
pub fn kernel_zk(params: &ProblemParams, k: u32, r: f64) -> Result<f64> {
    if k == 0 || !is_critical(params, k) {
        return Err(HenonError::NotCritical {
            k,
            alpha: params.alpha,
            critical: alpha_crit(k.max(1), params.n, params.p),
        });
    }
    Ok(tangent_limit_profile(params, r))
}

/// `r^{(p+alpha)/(p(p-1))} (1 + r^{(p+alpha)/(p-1)})^{-(N+alpha)/(p+alpha)}`, the
/// first eigenfunction of the whole-space angular eigenproblem; the kernel
/// factor at `alpha = alpha(k)`.
pub fn tangent_limit_profile(params: &ProblemParams, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let pw = params.profile_power();
    let e = (params.dim() + params.alpha) / (params.p + params.alpha);
    let lr = r.ln();
    (pw / params.p * lr - e * softplus(pw * lr)).exp()
}

/// Derivative of [`tangent_limit_profile`] in `ln r`.
pub fn tangent_limit_profile_dt(params: &ProblemParams, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let pw = params.profile_power();
    let e = (params.dim() + params.alpha) / (params.p + params.alpha);
    let sig = crate::numerics::logistic(pw * r.ln());
    tangent_limit_profile(params, r) * pw * (1.0 / params.p - e * sig)
}

/// Exponents and value of the first eigenfunction of the weighted mode-`k` problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiK {
    pub rho: f64,
    pub nu: f64,
    pub value: f64,
}

pub fn phi_k_exponents(params: &ProblemParams, k: u32) -> (f64, f64) {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let lam = lambda_k(k, params.n) as f64;
    let b = params.indicial_b();
    let rho = ((b * b + 4.0 * (p - 1.0) * lam).sqrt() - b) / (2.0 * (p - 1.0));
    let nu = (((n - p).powi(2) + 4.0 * (p - 1.0) * lam).sqrt() + 2.0 * rho * (p - 1.0) + n - p) / (2.0 * (p + a));
    (rho, nu)
}

pub fn eigenfunction_phi_k(params: &ProblemParams, k: u32, r: f64) -> PhiK {
    let (rho, nu) = phi_k_exponents(params, k);
    let value = if r == 0.0 {
        if rho == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let lr = r.ln();
        (rho * lr - nu * softplus(params.profile_power() * lr)).exp()
    };
    PhiK { rho, nu, value }
}

/// First eigenvalue `mu_{1,k}` of the weighted mode-`k` problem.
pub fn mu_1k(params: &ProblemParams, k: u32) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let (_, nu) = phi_k_exponents(params, k);
    ((p + a).powi(2) * nu * (nu + 1.0) + nu * (p + a) * (p - 2.0) * (n + a)) / ((n + a) * (n * p + p * a - n + p))
}

/// `beta_alpha(eps) = U_alpha(1/eps)`.
pub fn beta_boundary(params: &ProblemParams, eps: f64) -> f64 {
    evaluate_bubble(params, 1.0, 1.0 / eps)
}

/// `U_alpha(r) - beta_alpha(eps)` on the ball of radius `1/eps`, zero outside.
pub fn approx_radial_solution(params: &ProblemParams, eps: f64, r: f64) -> Result<f64> {
    params.check_eps(eps)?;
    if r >= 1.0 / eps {
        return Ok(0.0);
    }
    Ok(evaluate_bubble(params, 1.0, r) - beta_boundary(params, eps))
}
