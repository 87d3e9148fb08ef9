//! Sampled radial profiles.

use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};

/// A radial function sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `u'(r_i)` when known; enables Hermite interpolation.
    pub derivatives: Option<Vec<f64>>,
    /// Leading power `rho` with `u ~ c r^rho` near the origin.
    pub origin_exponent: f64,
    /// Decay power near the right endpoint (negative for decaying profiles).
    pub tail_exponent: f64,
}

impl RadialFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, origin_exponent: f64, tail_exponent: f64) -> Result<Self> {
        let f = Self { grid, values, derivatives: None, origin_exponent, tail_exponent };
        f.validate()?;
        Ok(f)
    }

    pub fn with_derivatives(mut self, derivatives: Vec<f64>) -> Result<Self> {
        if derivatives.len() != self.grid.len() || derivatives.iter().any(|d| !d.is_finite()) {
            return Err(HenonError::InvalidParams("derivative samples do not match the grid".into()));
        }
        self.derivatives = Some(derivatives);
        Ok(self)
    }

    /// Samples `f` (and optionally `df`) on `grid`.
    pub fn sample<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F, origin_exponent: f64, tail_exponent: f64) -> Result<Self> {
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values, origin_exponent, tail_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < 2 || self.grid.len() != self.values.len() {
            return Err(HenonError::InvalidParams("profile needs matching grid and values of length >= 2".into()));
        }
        if self.grid[0] < 0.0 || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HenonError::InvalidParams("profile grid must be nonnegative and strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HenonError::InvalidParams("profile values must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// True when the profile is flat at the origin, `u'(0) = 0`.
    pub fn has_symmetric_origin(&self) -> bool {
        self.origin_exponent == 0.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the entry with the largest absolute value.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Number of strict sign changes, ignoring entries below `tol * sup`.
    pub fn sign_changes(&self, tol: f64) -> usize {
        let gate = tol * self.sup_norm();
        let mut last = 0.0f64;
        let mut count = 0;
        for &v in &self.values {
            if v.abs() <= gate {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }

    fn locate(&self, r: f64) -> usize {
        let g = &self.grid;
        match g.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(g.len() - 2),
            Err(i) => i.saturating_sub(1).min(g.len() - 2),
        }
    }

    /// Value at `r`: cubic Hermite with stored derivatives, else piecewise linear.
    /// Outside the grid the end value is returned.
    pub fn eval(&self, r: f64) -> f64 {
        let g = &self.grid;
        if r <= g[0] {
            return self.values[0];
        }
        if r >= self.r_max() {
            return *self.values.last().unwrap();
        }
        let i = self.locate(r);
        let h = g[i + 1] - g[i];
        let s = (r - g[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match &self.derivatives {
            Some(d) => {
                let (m0, m1) = (d[i] * h, d[i + 1] * h);
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * m1
            }
            None => y0 + s * (y1 - y0),
        }
    }

    /// Derivative at `r` from the Hermite interpolant (or the chord slope).
    pub fn eval_derivative(&self, r: f64) -> f64 {
        let g = &self.grid;
        let r = r.clamp(g[0], self.r_max());
        let i = self.locate(r);
        let h = g[i + 1] - g[i];
        let s = (r - g[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match &self.derivatives {
            Some(d) => {
                let (m0, m1) = (d[i] * h, d[i + 1] * h);
                let s2 = s * s;
                ((6.0 * s2 - 6.0 * s) * y0
                    + (3.0 * s2 - 4.0 * s + 1.0) * m0
                    + (-6.0 * s2 + 6.0 * s) * y1
                    + (3.0 * s2 - 2.0 * s) * m1)
                    / h
            }
            None => (y1 - y0) / h,
        }
    }

    /// Rescales so the entry of largest magnitude equals `+1`.
    pub fn normalize_sup(&mut self) {
        let i = self.argmax_abs();
        let s = self.values[i];
        if s != 0.0 {
            for v in &mut self.values {
                *v /= s;
            }
            if let Some(d) = &mut self.derivatives {
                for v in d {
                    *v /= s;
                }
            }
        }
    }

    /// Largest `|self - other|` over the nodes of `self` lying in `[lo, hi]`.
    pub fn sup_distance_on<F: Fn(f64) -> f64>(&self, other: F, lo: f64, hi: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .fold(0.0, |m, (r, v)| m.max((v - other(*r)).abs()))
    }
}

/// `n + 1` geometric nodes from `r_min` to `r_max`, preceded by the origin.
pub fn log_grid_with_origin(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 2);
    g.push(0.0);
    g.extend(log_grid(r_min, r_max, n));
    g
}

/// `n + 1` geometric nodes from `r_min` to `r_max`, endpoints exact.
pub fn log_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (r_min.ln(), r_max.ln());
    let mut g: Vec<f64> = (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect();
    g[0] = r_min;
    g[n] = r_max;
    g
}

/// Default grading: about 2000 nodes over `[1e-4, 1e4]`.
pub fn default_grid() -> Vec<f64> {
    log_grid_with_origin(1e-4, 1e4, 2000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialFunction::new(vec![0.0, 1.0, 1.0], vec![1.0; 3], 0.0, 0.0).is_err());
        assert!(RadialFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN], 0.0, 0.0).is_err());
        assert!(RadialFunction::new(vec![0.0, 1.0], vec![1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let f = |r: f64| r * r * r - 2.0 * r + 1.0;
        let df = |r: f64| 3.0 * r * r - 2.0;
        let d = grid.iter().map(|&r| df(r)).collect();
        let prof = RadialFunction::sample(grid, f, 0.0, 0.0).unwrap().with_derivatives(d).unwrap();
        for &r in &[0.05, 0.77, 1.234, 2.99] {
            assert_relative_eq!(prof.eval(r), f(r), epsilon = 1e-12);
            assert_relative_eq!(prof.eval_derivative(r), df(r), epsilon = 1e-11);
        }
    }

    #[test]
    fn sign_changes_and_normalization() {
        let grid = log_grid_with_origin(1e-3, 10.0, 400);
        let mut prof = RadialFunction::sample(grid, |r| -(r.sin()), 1.0, 0.0).unwrap();
        assert_eq!(prof.sign_changes(1e-9), 3);
        prof.normalize_sup();
        assert_relative_eq!(prof.values[prof.argmax_abs()], 1.0);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 1e4, 2000);
        assert_eq!(g.len(), 2001);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[2000], 1e4);
        assert_eq!(default_grid()[0], 0.0);
    }
}
