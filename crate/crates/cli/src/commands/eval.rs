//! Closed-form point values.

use serde::Serialize;

use henon_core::core_model::{
    approx_radial_solution, evaluate_bubble, evaluate_bubble_derivative, is_critical, kernel_z, kernel_zk,
};

use crate::output::Stamp;
use crate::{ExperimentConfig, Status};

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub r: f64,
    pub lambda: f64,
    pub bubble: f64,
    pub bubble_derivative: f64,
    pub eps: f64,
    /// `U_alpha - beta_alpha(eps)` on the ball, 0 outside.
    pub truncated: f64,
    pub kernel_z: f64,
    /// Degree whose kernel factor is reported, when alpha is critical for some `k` in the list.
    pub k: Option<u32>,
    pub kernel_zk: Option<f64>,
}

pub fn rows(cfg: &ExperimentConfig) -> anyhow::Result<Vec<EvalRow>> {
    let params = cfg.params;
    let critical = cfg.k_list.iter().copied().find(|&k| k >= 2 && is_critical(&params, k));
    let mut out = Vec::new();
    for &r in &cfg.eval.radii {
        for &eps in &cfg.eps_list {
            out.push(EvalRow {
                r,
                lambda: cfg.eval.lambda,
                bubble: evaluate_bubble(&params, cfg.eval.lambda, r),
                bubble_derivative: evaluate_bubble_derivative(&params, cfg.eval.lambda, r),
                eps,
                truncated: approx_radial_solution(&params, eps, r)?,
                kernel_z: kernel_z(&params, r),
                k: critical,
                kernel_zk: critical.map(|k| kernel_zk(&params, k, r)).transpose()?,
            });
        }
    }
    Ok(out)
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    let rows = rows(cfg)?;
    let stamp = Stamp::new(cfg)?;
    stamp.write_csv("eval.csv", &rows)?;
    stamp.write_jsonl("eval.jsonl", &rows)?;
    Ok(Status::Ok)
}
