//! Non-radial branch from a bifurcation point, optionally checked against the explicit family.

use std::path::Path;

use serde::Serialize;

use henon_core::bifurcation::{locate_alpha_k, BifurcationConfig};
use henon_core::continuation::family::{explicit_family_constancy, family_sector, match_explicit_family, FamilyMatch};
use henon_core::continuation::validate::{branch_solution_validate, separation_from_closed_form, ValidationReport};
use henon_core::continuation::{continue_branch, BranchEvent, ContinuationConfig, GalerkinConfig};
use henon_core::profile::log_grid;
use henon_core::quadrature::gauss_legendre;
use henon_core::{BifurcationPoint, BranchState, SymmetrySector};

use crate::commands::bifurcate::read_points;
use crate::output::Stamp;
use crate::{ExperimentConfig, Status, UsageError};

const FAMILY_CONSTANCY_GATE: f64 = 1e-6;
const FAMILY_MODE_GATE: f64 = 5e-2;
/// Family members compared against the branch.
const FAMILY_MAX_A: f64 = 0.3;

#[derive(Debug, Clone, Serialize)]
pub struct StateRow {
    pub index: usize,
    pub alpha: f64,
    pub arclength: f64,
    pub ds: f64,
    pub symmetry_defect: f64,
    pub signed_defect: f64,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub family_a: Option<f64>,
    pub mode0_error: Option<f64>,
    pub base_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct StateRecord<'a> {
    index: usize,
    #[serde(flatten)]
    state: &'a BranchState,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySummary {
    pub constancy: Vec<(f64, f64)>,
    pub matched_states: usize,
    pub worst_mode_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSummary {
    pub sector: SymmetrySector,
    pub n: u32,
    pub p: f64,
    pub eps: f64,
    pub degrees: Vec<u32>,
    pub grid: Vec<f64>,
    pub bifurcation_alpha: f64,
    pub locator_alpha: f64,
    pub accepted: usize,
    pub termination: Option<String>,
    pub events: Vec<BranchEvent>,
    pub closed_form_separation: Vec<f64>,
    pub endpoint: Option<ValidationReport>,
    pub family: Option<FamilySummary>,
}

fn start_point(cfg: &ExperimentConfig, k: u32, eps: f64, file: Option<&Path>) -> anyhow::Result<BifurcationPoint> {
    let Some(file) = file else {
        let bcfg =
            BifurcationConfig { log_step: cfg.grid.log_step, root_tol: cfg.tolerances.root, ..Default::default() };
        return Ok(locate_alpha_k(&cfg.params.family(), k, eps, &bcfg)?);
    };
    let text = std::fs::read_to_string(file).map_err(|e| UsageError(format!("cannot read {}: {e}", file.display())))?;
    let points = read_points(&text).map_err(|e| UsageError(format!("malformed point file {}: {e}", file.display())))?;
    points
        .into_iter()
        .map(|r| r.point)
        .find(|p| p.k == k && p.eps == eps && p.n == cfg.params.n && p.p == cfg.params.p)
        .ok_or_else(|| {
            UsageError(format!(
                "{} holds no point for N = {}, p = {}, k = {k}, eps = {eps}",
                file.display(),
                cfg.params.n,
                cfg.params.p
            ))
            .into()
        })
}

pub fn run(cfg: &ExperimentConfig, point_file: Option<&Path>) -> anyhow::Result<Status> {
    let k = cfg.k_list[0];
    let eps = cfg.eps_list[0];
    let sector = cfg.symmetry_sector(k)?;
    if cfg.branch.family && (cfg.params.n != 4 || cfg.params.p != 2.0 || sector != family_sector()) {
        return Err(UsageError("family mode needs N = 4, p = 2, k = 2 on the product:2 sector".into()).into());
    }
    let b = &cfg.branch;
    let defaults = ContinuationConfig::default();
    let ccfg = ContinuationConfig {
        galerkin: GalerkinConfig {
            elements: cfg.grid.elements,
            grading: cfg.grid.grading,
            j_max: cfg.grid.j_max,
            ..Default::default()
        },
        tol: cfg.tolerances.corrector,
        steps: b.steps,
        ds: b.ds,
        ds_min: defaults.ds_min.min(b.ds),
        ds_max: b.ds_max,
        direction: b.direction,
        ..defaults
    };
    ccfg.validate()?;
    let start = start_point(cfg, k, eps, point_file)?;
    let branch = continue_branch(&start, sector, &ccfg)?;

    let mut matches: Vec<Option<FamilyMatch>> = vec![None; branch.states.len()];
    let mut family = None;
    if cfg.branch.family {
        let radii = log_grid(0.05, 20.0, 120);
        let xs = gauss_legendre(16).nodes;
        let constancy: Vec<(f64, f64)> =
            [0.1, FAMILY_MAX_A].iter().map(|&a| (a, explicit_family_constancy(a, &radii, &xs))).collect();
        for (i, state) in branch.states.iter().enumerate().skip(1) {
            matches[i] = match_explicit_family(&branch, state).ok();
        }
        let small: Vec<&FamilyMatch> = matches.iter().flatten().filter(|m| m.a.abs() <= FAMILY_MAX_A).collect();
        let worst = small.iter().map(|m| m.mode0_error.max(m.base_error)).fold(0.0, f64::max);
        family = Some(FamilySummary {
            passed: constancy.iter().all(|c| c.1 <= FAMILY_CONSTANCY_GATE)
                && !small.is_empty()
                && worst <= FAMILY_MODE_GATE,
            constancy,
            matched_states: small.len(),
            worst_mode_error: worst,
        });
    }
    let endpoint = match branch.states.len() {
        1 => None,
        n => Some(branch_solution_validate(&branch, &branch.states[n - 1])?),
    };

    let rows: Vec<StateRow> = branch
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| StateRow {
            index: i,
            alpha: s.alpha,
            arclength: s.arclength,
            ds: s.ds,
            symmetry_defect: s.symmetry_defect,
            signed_defect: s.signed_defect,
            newton_residual: s.newton_residual,
            newton_iterations: s.newton_iterations,
            family_a: matches[i].map(|m| m.a),
            mode0_error: matches[i].map(|m| m.mode0_error),
            base_error: matches[i].map(|m| m.base_error),
        })
        .collect();
    let records: Vec<StateRecord> =
        branch.states.iter().enumerate().map(|(index, state)| StateRecord { index, state }).collect();
    let summary = BranchSummary {
        sector,
        n: branch.n,
        p: branch.p,
        eps: branch.eps,
        degrees: branch.degrees.clone(),
        grid: branch.grid.clone(),
        bifurcation_alpha: branch.bifurcation_alpha,
        locator_alpha: branch.locator_alpha,
        accepted: branch.accepted().len(),
        termination: branch.termination.as_ref().map(|e| e.to_string()),
        events: branch.events.clone(),
        closed_form_separation: separation_from_closed_form(&branch)?,
        endpoint,
        family,
    };
    let stamp = Stamp::new(cfg)?;
    stamp.write_csv("branch.csv", &rows)?;
    stamp.write_jsonl("branch.jsonl", &records)?;
    stamp.write_json("branch_summary.json", &summary)?;

    if let Some(e) = &branch.termination {
        return Ok(Status::NumericalFailure(format!("branch stopped after {} accepted states: {e}", summary.accepted)));
    }
    let mut failed = Vec::new();
    if let Some(report) = &summary.endpoint {
        failed.extend(report.failures.iter().map(|f| format!("endpoint: {f}")));
    }
    if let Some(f) = &summary.family {
        if !f.passed {
            failed.push(format!(
                "family: {} matched states, worst mode error {}, constancy {:?}",
                f.matched_states, f.worst_mode_error, f.constancy
            ));
        }
    }
    Ok(if failed.is_empty() { Status::Ok } else { Status::ChecksFailed(failed) })
}
