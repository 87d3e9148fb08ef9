//! Experiment configuration: one JSON document, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use henon_core::continuation::SectorKind;
use henon_core::{ProblemParams, SymmetrySector};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ProblemParams,
    pub eps_list: Vec<f64>,
    pub k_list: Vec<u32>,
    pub grid: GridOptions,
    pub tolerances: Tolerances,
    pub sector: SectorKind,
    pub out: PathBuf,
    pub seed: u64,
    pub spectrum: SpectrumOptions,
    pub branch: BranchOptions,
    pub eval: EvalOptions,
    pub verify: VerifyOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOptions {
    /// Step in `ln r` of the radial eigen solvers.
    pub log_step: f64,
    /// Truncation radius of whole-space problems.
    pub r_inf: f64,
    /// Radial elements of the continuation discretization.
    pub elements: usize,
    pub grading: Option<f64>,
    /// Highest mode multiple kept by the continuation.
    pub j_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted eigenvector residual.
    pub eigen: f64,
    /// Root tolerance on `mu_1^eps + lambda_k`.
    pub root: f64,
    pub corrector: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    /// Sweep values of alpha; empty means `params.alpha` only.
    pub alphas: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchOptions {
    pub steps: usize,
    pub ds: f64,
    pub ds_max: f64,
    pub direction: f64,
    /// Cross-check against the explicit family (N = 4, p = 2, l = 2, k = 2).
    pub family: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub radii: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Random `(N, p, alpha)` triples for the Morse-index cross-check.
    pub random_profiles: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ProblemParams { n: 4, p: 2.0, alpha: 2.0 },
            eps_list: vec![1e-1, 1e-2, 1e-3],
            k_list: vec![2],
            grid: GridOptions::default(),
            tolerances: Tolerances::default(),
            sector: SectorKind::Zonal,
            out: PathBuf::from("henon-out"),
            seed: 0,
            spectrum: SpectrumOptions::default(),
            branch: BranchOptions::default(),
            eval: EvalOptions::default(),
            verify: VerifyOptions::default(),
        }
    }
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { log_step: 0.01, r_inf: 1e3, elements: 400, grading: None, j_max: 3 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eigen: 1e-8, root: 1e-10, corrector: 1e-9 }
    }
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { alphas: Vec::new(), count: 2 }
    }
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { steps: 20, ds: 1e-2, ds_max: 1e-1, direction: 1.0, family: false }
    }
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { radii: vec![0.0, 0.5, 1.0, 2.0, 10.0], lambda: 1.0 }
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { random_profiles: 10 }
    }
}

/// Per-command flag values layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eps: Option<Vec<f64>>,
    pub k: Option<Vec<u32>>,
    pub alpha: Option<f64>,
    pub sector: Option<SectorKind>,
}

/// `zonal` or `product:L`.
pub fn parse_sector(s: &str) -> Result<SectorKind, String> {
    match s.split_once(':') {
        None if s == "zonal" => Ok(SectorKind::Zonal),
        Some(("product", l)) => {
            l.parse().map(|l| SectorKind::Product { l }).map_err(|e| format!("bad block size {l:?}: {e}"))
        }
        _ => Err(format!("unknown sector {s:?}; expected zonal or product:L")),
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("malformed config {}: {e}", path.display())).into())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.eps {
            self.eps_list = v.clone();
        }
        if let Some(v) = &o.k {
            self.k_list = v.clone();
        }
        if let Some(v) = o.alpha {
            self.params.alpha = v;
        }
        if let Some(v) = o.sector {
            self.sector = v;
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let fail = |msg: String| -> anyhow::Result<()> { Err(UsageError(msg).into()) };
        self.params.validate().context("params")?;
        if self.eps_list.is_empty() || self.eps_list.iter().any(|e| !(*e > 0.0)) {
            return fail("eps_list must hold positive values".into());
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return fail("eps_list must be strictly decreasing".into());
        }
        for &eps in &self.eps_list {
            self.params.check_eps(eps)?;
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return fail("k_list must hold positive integers".into());
        }
        let t = &self.tolerances;
        if !(t.eigen > 0.0 && t.root > 0.0 && t.corrector > 0.0) {
            return fail("all tolerances must be positive".into());
        }
        let g = &self.grid;
        if !(g.log_step > 0.0 && g.r_inf > 1.0 && g.elements >= 10 && g.j_max >= 1) {
            return fail("grid needs log_step > 0, r_inf > 1, elements >= 10 and j_max >= 1".into());
        }
        if !(1..=3).contains(&self.spectrum.count) {
            return fail("spectrum.count must lie in 1..=3".into());
        }
        if !(self.eval.lambda > 0.0) || self.eval.radii.iter().any(|r| !(*r >= 0.0)) {
            return fail("eval needs lambda > 0 and non-negative radii".into());
        }
        Ok(())
    }

    /// The symmetry sector for degree `k`, refusing odd `k` on product sectors.
    pub fn symmetry_sector(&self, k: u32) -> anyhow::Result<SymmetrySector> {
        let s = match self.sector {
            SectorKind::Zonal => SymmetrySector::zonal(self.params.n, k),
            SectorKind::Product { l } => SymmetrySector::product(self.params.n, l, k),
        };
        Ok(s?)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let partial: ExperimentConfig = serde_json::from_str(r#"{"k_list": [3]}"#).unwrap();
        assert_eq!(partial.k_list, vec![3]);
        assert_eq!(partial.params, c.params);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        let mut c = ExperimentConfig { eps_list: vec![0.01, 0.1], ..Default::default() };
        assert!(c.validate().is_err());
        c.eps_list = vec![0.1];
        c.k_list = vec![0];
        assert!(c.validate().is_err());
        c.k_list = vec![2];
        c.tolerances.root = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_change_the_hash() {
        let base = ExperimentConfig::default();
        let mut c = base.clone();
        c.apply(&Overrides { alpha: Some(1.5), sector: Some(SectorKind::Product { l: 2 }), ..Default::default() });
        assert_eq!(c.params.alpha, 1.5);
        assert_ne!(c.hash(), base.hash());
    }

    #[test]
    fn sector_syntax() {
        assert_eq!(parse_sector("zonal"), Ok(SectorKind::Zonal));
        assert_eq!(parse_sector("product:2"), Ok(SectorKind::Product { l: 2 }));
        assert!(parse_sector("product:x").is_err());
        assert!(parse_sector("ring").is_err());
    }

    proptest::proptest! {
        #[test]
        fn hash_is_a_function_of_the_content(alpha in 0.0f64..10.0, seed in 0u64..1000) {
            let mut a = ExperimentConfig::default();
            a.apply(&Overrides { alpha: Some(alpha), seed: Some(seed), ..Default::default() });
            let b: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            proptest::prop_assert_eq!(a.hash(), b.hash());
            proptest::prop_assert_eq!(a.hash().len(), 64);
        }
    }
}
