//! Spherical-harmonic bookkeeping: degrees, eigenvalues, multiplicities,
//! critical exponents and the Morse index of the bubble.

use serde::{Deserialize, Serialize};

use crate::core_model::{mu_1k, ProblemParams};
use crate::error::{HenonError, Result};

/// Relative gate used when deciding whether `alpha` sits on some `alpha(k)`.
pub const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicMode {
    pub k: u32,
    pub n: u32,
    pub lambda_k: u64,
    pub multiplicity: u128,
}

impl HarmonicMode {
    pub fn new(k: u32, n: u32) -> Self {
        Self { k, n, lambda_k: lambda_k(k, n), multiplicity: multiplicity(k, n) }
    }
}

/// `k(N+k-2)`.
pub fn lambda_k(k: u32, n: u32) -> u64 {
    k as u64 * (n as u64 + k as u64 - 2)
}

/// Binomial coefficient by the multiplicative formula; every partial product is exact.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

/// Dimension of the space of degree-`k` spherical harmonics on `S^{N-1}`.
pub fn multiplicity(k: u32, n: u32) -> u128 {
    if k == 0 {
        return 1;
    }
    let (k, n) = (k as u64, n as u64);
    // (N+2k-2)(N+k-3)!/((N-2)! k!) = (N+2k-2) C(N+k-3, k-1) / k
    (n + 2 * k - 2) as u128 * binomial(n + k - 3, k - 1) / k as u128
}

/// Nonnegative root `alpha(k)` of `(p-1)a^2 + p(N+p-2)a + p^2(1-k)(k+N-1) = 0`.
pub fn alpha_crit(k: u32, n: u32, p: f64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let (k, n) = (k as f64, n as f64);
    let b = n + p - 2.0;
    let disc = b * b + 4.0 * (k - 1.0) * (p - 1.0) * (k + n - 1.0);
    // rationalized form avoids cancellation between p sqrt(disc) and p b
    let num = 4.0 * p * (k - 1.0) * (p - 1.0) * (k + n - 1.0);
    num / (2.0 * (p - 1.0) * (disc.sqrt() + b))
}

/// Residual of the defining quadratic at `alpha`.
pub fn alpha_crit_quadratic(k: u32, n: u32, p: f64, alpha: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    (p - 1.0) * alpha * alpha + p * (n + p - 2.0) * alpha + p * p * (1.0 - k) * (k + n - 1.0)
}

/// `zeta(N,p,alpha)`; equals `k` exactly when `alpha = alpha(k)`.
pub fn zeta(params: &ProblemParams) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    let rad = 4.0 * (p - 1.0) * a * a + 4.0 * p * (n + p - 2.0) * a + n * n * p * p;
    (2.0 * p - n * p + rad.sqrt()) / (2.0 * p)
}

/// The degree `k >= 2` whose critical exponent coincides with `alpha`, if any.
/// `alpha = alpha(1) = 0` is the classical translation-invariant case and is not flagged.
pub fn degenerate_degree(params: &ProblemParams) -> Option<u32> {
    let z = zeta(params);
    let lo = (z.floor() as i64 - 1).max(2) as u32;
    (lo..=lo + 3).find(|&k| {
        let ak = alpha_crit(k, params.n, params.p);
        (params.alpha - ak).abs() <= DEGENERATE_TOL * (1.0 + params.alpha)
    })
}

/// Morse index `sum_{0 <= k < zeta} multiplicity(k, N)`.
pub fn morse_index(params: &ProblemParams) -> Result<u128> {
    if let Some(k) = degenerate_degree(params) {
        return Err(HenonError::Degenerate { k, alpha: params.alpha });
    }
    let z = if params.alpha <= DEGENERATE_TOL { 1.0 } else { zeta(params) };
    let mut total = 0u128;
    let mut k = 0u32;
    while (k as f64) < z {
        total += multiplicity(k, params.n);
        k += 1;
    }
    Ok(total)
}

/// Count of negative directions from the per-mode first eigenvalues: each
/// degree with `mu_{1,k} < 1` contributes its multiplicity.
pub fn negative_direction_count(params: &ProblemParams) -> Result<u128> {
    if let Some(k) = degenerate_degree(params) {
        return Err(HenonError::Degenerate { k, alpha: params.alpha });
    }
    if params.alpha <= DEGENERATE_TOL {
        return Ok(1);
    }
    let mut total = 0u128;
    let mut k = 0u32;
    while mu_1k(params, k) < 1.0 {
        total += multiplicity(k, params.n);
        k += 1;
    }
    Ok(total)
}

/// `mu_1(alpha) = -(p+alpha)(Np + p alpha - p - alpha)/p^2`.
pub fn mu1_limit(params: &ProblemParams) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    -(p + a) * (n * p + p * a - p - a) / (p * p)
}

pub fn dmu1_dalpha(params: &ProblemParams) -> f64 {
    let (n, p, a) = (params.dim(), params.p, params.alpha);
    -(p * (p + 2.0 * a + n - 2.0) - 2.0 * a) / (p * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pp(n: u32, p: f64, a: f64) -> ProblemParams {
        ProblemParams::new(n, p, a).unwrap()
    }

    #[test]
    fn eigenvalues_and_multiplicities() {
        assert_eq!(lambda_k(0, 5), 0);
        assert_eq!(lambda_k(1, 7), 6);
        assert_eq!(lambda_k(2, 4), 8);
        assert_eq!(multiplicity(0, 4), 1);
        assert_eq!(multiplicity(1, 6), 6);
        assert_eq!(multiplicity(2, 4), 9);
        assert_eq!(multiplicity(3, 3), 7);
        assert_eq!(multiplicity(5, 2), 2);
    }

    #[test]
    fn multiplicity_matches_binomial_difference() {
        for n in 2..12u32 {
            for k in 0..30u32 {
                let a = binomial((n + k - 1) as u64, k as u64);
                let b = if k >= 2 { binomial((n + k - 3) as u64, (k - 2) as u64) } else { 0 };
                assert_eq!(multiplicity(k, n), a - b, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn alpha_crit_values() {
        assert_eq!(alpha_crit(1, 5, 3.0), 0.0);
        for n in 3..8 {
            for k in 2..7 {
                assert_relative_eq!(alpha_crit(k, n, 2.0), 2.0 * (k as f64 - 1.0), max_relative = 1e-14);
            }
        }
        let root = (-3.75 + (3.75f64 * 3.75 + 4.0 * 0.5 * 9.0).sqrt()) / 1.0;
        assert_relative_eq!(alpha_crit(2, 3, 1.5), root, max_relative = 1e-14);
        for &(n, p) in &[(3u32, 1.5), (5, 3.0), (6, 2.5)] {
            for k in 2..6 {
                let a = alpha_crit(k, n, p);
                assert!(alpha_crit_quadratic(k, n, p, a).abs() < 1e-10 * (1.0 + a * a));
                assert!(alpha_crit(k + 1, n, p) > a);
            }
        }
    }

    #[test]
    fn zeta_inverts_alpha_crit() {
        assert_relative_eq!(zeta(&pp(4, 2.0, 0.0)), 1.0, max_relative = 1e-15);
        for &(n, p) in &[(4u32, 2.0), (5, 3.0), (3, 1.5)] {
            for k in 2..4 {
                let a = alpha_crit(k, n, p);
                assert_relative_eq!(zeta(&pp(n, p, a)), k as f64, max_relative = 1e-12);
            }
            let mut prev = zeta(&pp(n, p, 0.0));
            for i in 1..100 {
                let z = zeta(&pp(n, p, i as f64 * 0.1));
                assert!(z > prev);
                prev = z;
            }
        }
    }

    #[test]
    fn morse_index_jumps() {
        assert_eq!(morse_index(&pp(4, 2.0, 0.0)).unwrap(), 1);
        assert_eq!(morse_index(&pp(4, 2.0, 1e-6)).unwrap(), 5);
        assert_eq!(morse_index(&pp(4, 2.0, 2.0 + 1e-4)).unwrap(), 14);
        assert_eq!(morse_index(&pp(4, 2.0, 2.0 - 1e-4)).unwrap(), 5);
        assert!(matches!(morse_index(&pp(4, 2.0, 2.0)), Err(HenonError::Degenerate { k: 2, .. })));
        assert!(matches!(morse_index(&pp(5, 3.0, alpha_crit(3, 5, 3.0))), Err(HenonError::Degenerate { k: 3, .. })));
    }

    #[test]
    fn morse_index_agrees_with_mode_count() {
        for &(n, p) in &[(4u32, 2.0), (5, 3.0), (3, 1.5), (6, 2.5)] {
            for i in 1..60 {
                let params = pp(n, p, 0.137 * i as f64);
                if degenerate_degree(&params).is_some() {
                    continue;
                }
                assert_eq!(morse_index(&params).unwrap(), negative_direction_count(&params).unwrap());
            }
        }
    }

    #[test]
    fn mu1_limit_values() {
        assert_relative_eq!(mu1_limit(&pp(5, 3.0, 0.0)), -4.0, max_relative = 1e-15);
        assert_relative_eq!(mu1_limit(&pp(4, 2.0, 2.0)), -8.0, max_relative = 1e-15);
        assert_relative_eq!(dmu1_dalpha(&pp(4, 2.0, 2.0)), -3.0, max_relative = 1e-15);
        for &(n, p) in &[(4u32, 2.0), (5, 3.0), (3, 1.5), (6, 2.5), (7, 4.5)] {
            for k in 1..=6 {
                let a = alpha_crit(k, n, p);
                let lam = lambda_k(k, n) as f64;
                assert!((mu1_limit(&pp(n, p, a)) + lam).abs() <= 1e-12 * lam);
            }
        }
    }

    #[test]
    fn dmu1_matches_finite_difference_and_is_negative() {
        for &(n, p, a) in &[(4u32, 2.0, 2.0), (5, 3.0, 1.0), (3, 1.5, 0.7)] {
            let h = 1e-6;
            let fd = (mu1_limit(&pp(n, p, a + h)) - mu1_limit(&pp(n, p, a - h))) / (2.0 * h);
            assert!((fd - dmu1_dalpha(&pp(n, p, a))).abs() < 1e-6);
        }
        for i in 0..50 {
            for j in 0..50 {
                let n = 6;
                let p = 1.01 + 4.9 * j as f64 / 50.0;
                let a = 0.01 + 10.0 * i as f64 / 50.0;
                assert!(dmu1_dalpha(&pp(n, p, a)) < 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn morse_index_is_monotone(n in 3u32..8, pf in 0.05f64..0.95, a in 0.0f64..12.0, da in 0.0f64..3.0) {
            let p = 1.0 + pf * (n as f64 - 1.0);
            let lo = pp(n, p, a);
            let hi = pp(n, p, a + da);
            if let (Ok(m0), Ok(m1)) = (morse_index(&lo), morse_index(&hi)) {
                prop_assert!(m1 >= m0);
            }
        }
    }
}
