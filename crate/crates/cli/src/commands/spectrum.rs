//! First angular eigenvalues on the ball, one row per `(alpha, eps, k, i)`.

use rayon::prelude::*;
use serde::Serialize;

use henon_core::sturm_liouville::{assemble_mode_problem, solve_spectrum, Domain, LinearizedProfile};

use crate::output::Stamp;
use crate::{ExperimentConfig, Status};

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub alpha: f64,
    pub eps: f64,
    pub k: u32,
    pub i: usize,
    pub mu: f64,
    pub error_estimate: f64,
    pub residual: f64,
    pub negative: bool,
    /// Below the left-end essential spectrum, hence a genuine eigenvalue.
    pub genuine: bool,
    /// For `i = 1`: whether `mu_1` dropped since the previous alpha of the sweep.
    pub mu1_decreasing: Option<bool>,
}

pub fn rows(cfg: &ExperimentConfig) -> anyhow::Result<Vec<SpectrumRow>> {
    let mut alphas = if cfg.spectrum.alphas.is_empty() { vec![cfg.params.alpha] } else { cfg.spectrum.alphas.clone() };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut items = Vec::new();
    for &eps in &cfg.eps_list {
        for &k in &cfg.k_list {
            for &alpha in &alphas {
                items.push((eps, k, alpha));
            }
        }
    }
    let blocks: Vec<Vec<SpectrumRow>> = items
        .par_iter()
        .map(|&(eps, k, alpha)| -> anyhow::Result<Vec<SpectrumRow>> {
            let params = cfg.params.with_alpha(alpha)?;
            let prob = assemble_mode_problem(&params, k, Domain::Ball { eps })?.with_log_step(cfg.grid.log_step);
            let threshold = {
                let prof = LinearizedProfile::from_params(&params);
                (params.p - 1.0) * prof.g_left().powi(2) / 4.0
            };
            let pairs = solve_spectrum(&prob, cfg.spectrum.count)?;
            Ok(pairs
                .iter()
                .map(|pair| SpectrumRow {
                    alpha,
                    eps,
                    k,
                    i: pair.index,
                    mu: pair.value,
                    error_estimate: pair.error_estimate,
                    residual: pair.residual,
                    negative: pair.value < 0.0,
                    genuine: pair.value < threshold,
                    mu1_decreasing: None,
                })
                .collect())
        })
        .collect::<anyhow::Result<_>>()?;
    let mut out: Vec<SpectrumRow> = blocks.into_iter().flatten().collect();
    let mut prev: Option<(f64, u32, f64)> = None;
    for row in out.iter_mut().filter(|r| r.i == 1) {
        if let Some((eps, k, mu)) = prev {
            if eps == row.eps && k == row.k {
                row.mu1_decreasing = Some(row.mu < mu);
            }
        }
        prev = Some((row.eps, row.k, row.mu));
    }
    Ok(out)
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    let rows = rows(cfg)?;
    let stamp = Stamp::new(cfg)?;
    stamp.write_csv("spectrum.csv", &rows)?;
    stamp.write_jsonl("spectrum.jsonl", &rows)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.residual > cfg.tolerances.eigen)
        .map(|r| format!("alpha {} eps {} k {} i {}: residual {}", r.alpha, r.eps, r.k, r.i, r.residual))
        .collect();
    if bad.is_empty() {
        Ok(Status::Ok)
    } else {
        Ok(Status::NumericalFailure(format!(
            "eigenvector residuals above {}: {}",
            cfg.tolerances.eigen,
            bad.join("; ")
        )))
    }
}
