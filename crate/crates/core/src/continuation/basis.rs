//! Symmetry sectors and the one-angle harmonic basis they reduce to.

use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::quadrature::{gauss_jacobi, GaussRule, JacobiFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorKind {
    /// Invariant under `O(N-1)` acting on the first `N-1` coordinates.
    Zonal,
    /// Invariant under `O(l) x O(N-l)`; depends on `(|x'|, |x''|)` only.
    Product { l: u32 },
}

/// A symmetry class of functions on `R^N` reduced to `(r, x)` with `x in [-1, 1]`.
///
/// Zonal: `x = x_N / r`. Product: `x = (|x''|^2 - |x'|^2) / r^2 = cos 2phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySector {
    pub kind: SectorKind,
    pub n: u32,
    pub base_degree: u32,
}

impl SymmetrySector {
    pub fn zonal(n: u32, k: u32) -> Result<Self> {
        if n < 2 {
            return Err(HenonError::InvalidParams(format!("dimension {n} has no angular variable")));
        }
        if k == 0 {
            return Err(HenonError::SectorRefused("base degree must be at least 1".into()));
        }
        Ok(Self { kind: SectorKind::Zonal, n, base_degree: k })
    }

    pub fn product(n: u32, l: u32, k: u32) -> Result<Self> {
        if k == 0 || k % 2 == 1 {
            return Err(HenonError::SectorRefused(format!(
                "the O(l) x O(N-l) sector carries only even degrees; k = {k} is odd"
            )));
        }
        if l == 0 || 2 * l > n {
            return Err(HenonError::SectorRefused(format!("block size l = {l} must lie in [1, {}]", n / 2)));
        }
        Ok(Self { kind: SectorKind::Product { l }, n, base_degree: k })
    }

    /// Exponents `(a, b)` of the reduced measure `(1-x)^a (1+x)^b dx`.
    pub fn jacobi_exponents(&self) -> (f64, f64) {
        let n = self.n as f64;
        match self.kind {
            SectorKind::Zonal => ((n - 3.0) / 2.0, (n - 3.0) / 2.0),
            SectorKind::Product { l } => (l as f64 / 2.0 - 1.0, (n - l as f64) / 2.0 - 1.0),
        }
    }

    /// Metric factor: `|grad u|^2 = u_r^2 + sigma (1 - x^2) u_x^2 / r^2`.
    pub fn sigma(&self) -> f64 {
        match self.kind {
            SectorKind::Zonal => 1.0,
            SectorKind::Product { .. } => 4.0,
        }
    }

    /// Harmonic degree of the `m`-th Jacobi polynomial.
    pub fn degree_of_index(&self, m: usize) -> u32 {
        match self.kind {
            SectorKind::Zonal => m as u32,
            SectorKind::Product { .. } => 2 * m as u32,
        }
    }

    /// Degrees `0 ..= j_max * k` admissible in the sector. Even degrees only
    /// when `k` is even, since odd harmonics are then never generated.
    pub fn degrees(&self, j_max: u32) -> Vec<u32> {
        let top = j_max * self.base_degree;
        let even_only = matches!(self.kind, SectorKind::Product { .. }) || self.base_degree % 2 == 0;
        (0..=top).filter(|d| !even_only || d % 2 == 0).collect()
    }

    /// Whether `x -> -x` is a symmetry of the reduced problem.
    pub fn has_mirror(&self) -> bool {
        let (a, b) = self.jacobi_exponents();
        a == b
    }

    /// Reduced coordinates of a point of `R^N`.
    pub fn reduce(&self, point: &[f64]) -> (f64, f64) {
        let r2: f64 = point.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let x = match self.kind {
            SectorKind::Zonal => point[point.len() - 1] / r,
            SectorKind::Product { l } => {
                let inner: f64 = point[..l as usize].iter().map(|v| v * v).sum();
                (r2 - 2.0 * inner) / r2
            }
        };
        (r, x.clamp(-1.0, 1.0))
    }
}

/// Orthonormal angular profiles of one sector evaluated on a Gauss rule.
#[derive(Debug, Clone)]
pub struct AngularBasis {
    pub sector: SymmetrySector,
    pub degrees: Vec<u32>,
    /// Jacobi index of each mode.
    pub indices: Vec<usize>,
    pub family: JacobiFamily,
    pub rule: GaussRule,
    /// `values[q][j] = P_j(x_q)`.
    pub values: Vec<Vec<f64>>,
    pub slopes: Vec<Vec<f64>>,
}

impl AngularBasis {
    pub fn new(sector: SymmetrySector, j_max: u32, points: usize) -> Self {
        let degrees = sector.degrees(j_max);
        let indices: Vec<usize> = degrees
            .iter()
            .map(|&d| match sector.kind {
                SectorKind::Zonal => d as usize,
                SectorKind::Product { .. } => (d / 2) as usize,
            })
            .collect();
        let top = *indices.last().unwrap_or(&0);
        let (a, b) = sector.jacobi_exponents();
        let family = JacobiFamily::new(a, b, top.max(1));
        let rule = gauss_jacobi(points, a, b);
        let mut values = Vec::with_capacity(points);
        let mut slopes = Vec::with_capacity(points);
        for &x in &rule.nodes {
            let (p, dp) = family.values_and_derivatives(top, x);
            values.push(indices.iter().map(|&m| p[m]).collect());
            slopes.push(indices.iter().map(|&m| dp[m]).collect());
        }
        Self { sector, degrees, indices, family, rule, values, slopes }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn top_index(&self) -> usize {
        *self.indices.last().unwrap_or(&0)
    }

    pub fn position_of_degree(&self, degree: u32) -> Option<usize> {
        self.degrees.iter().position(|&d| d == degree)
    }

    /// Laplace-Beltrami eigenvalue `d (d + N - 2)` of mode `j`.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let d = self.degrees[j] as f64;
        d * (d + self.sector.n as f64 - 2.0)
    }

    /// Profiles `P_j(x)` for all modes at an arbitrary `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let p = self.family.values(self.top_index(), x);
        self.indices.iter().map(|&m| p[m]).collect()
    }

    /// Parity `(-1)^m` of each mode under `x -> -x` (meaningful when the sector has a mirror).
    pub fn mirror_signs(&self) -> Vec<f64> {
        self.indices.iter().map(|&m| if m % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }
}
