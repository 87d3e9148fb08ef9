//! The closed-form identity suite for one parameter triple.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use henon_core::core_model::{
    is_critical, kernel_z, kernel_z_dt, kernel_zk, phi_k_exponents, talenti_constant, tangent_limit_profile_dt,
};
use henon_core::harmonics::{morse_index, negative_direction_count};
use henon_core::profile::log_grid_with_origin;
use henon_core::radial_solver::{
    bubble_residual, decay_exponent_fit, linearized_residual, pohozaev_residual_ball, sample_bubble,
    solve_radial_shooting, DecayQuantity, RadialBvp,
};
use henon_core::{HenonError, ProblemParams};

use crate::output::Stamp;
use crate::{ExperimentConfig, Status};

/// Shooting profiles enter the Pohozaev check only for `eps` at least this large.
const SHOOTING_POHOZAEV_MIN_EPS: f64 = 0.05;
/// Shooting profiles enter the decay check only for `eps` at most this small.
const SHOOTING_DECAY_MAX_EPS: f64 = 1e-3;
const HIGHEST_KERNEL_DEGREE: u32 = 12;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub gate: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub params: ProblemParams,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn add(
        &mut self,
        name: impl Into<String>,
        gate: f64,
        f: impl FnOnce() -> henon_core::Result<(f64, String)>,
    ) -> anyhow::Result<()> {
        let name = name.into();
        let check = match f() {
            Ok((value, detail)) => Check { name, value, gate, pass: value <= gate, detail },
            Err(e) if e.is_usage() => return Err(e.into()),
            Err(e) => Check { name, value: f64::NAN, gate, pass: false, detail: e.to_string() },
        };
        self.checks.push(check);
        Ok(())
    }
}

fn radii() -> Vec<f64> {
    (0..400).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 399.0)).collect()
}

fn max_over<F: Fn(f64) -> f64>(f: F) -> f64 {
    radii().into_iter().map(f).fold(0.0, f64::max)
}

fn decay_error(
    params: &ProblemParams,
    f: &henon_core::RadialFunction,
    value: DecayQuantity,
) -> henon_core::Result<(f64, String)> {
    let v = decay_exponent_fit(f, value)?.exponent;
    let g = decay_exponent_fit(f, DecayQuantity::Gradient)?.exponent;
    let err = (v / -params.value_decay_rate() - 1.0).abs().max((g / -params.gradient_decay_rate() - 1.0).abs());
    Ok((err, format!("value slope {v}, gradient slope {g}")))
}

fn random_triple(rng: &mut ChaCha8Rng) -> ProblemParams {
    let n = rng.random_range(3u32..=7);
    let p = 1.0 + rng.random_range(0.05..0.95) * (n as f64 - 1.0);
    ProblemParams { n, p, alpha: rng.random_range(0.05..8.0) }
}

pub fn suite(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let params = cfg.params;
    let mut s = Suite { checks: Vec::new() };
    s.add("bubble_residual", 1e-8, || {
        let worst = [0.5, 1.0, 2.0].iter().map(|&l| max_over(|r| bubble_residual(&params, l, r))).fold(0.0, f64::max);
        Ok((worst, "lambda in {0.5, 1, 2}, r in [1e-3, 1e3]".into()))
    })?;
    s.add("kernel_z", 1e-7, || {
        Ok((
            max_over(|r| linearized_residual(&params, 0, |t| kernel_z(&params, t), |t| kernel_z_dt(&params, t), r)),
            String::new(),
        ))
    })?;
    for k in 2..=HIGHEST_KERNEL_DEGREE {
        if !is_critical(&params, k) {
            continue;
        }
        s.add(format!("kernel_z{k}"), 1e-7, || {
            let res = max_over(|r| {
                linearized_residual(
                    &params,
                    k,
                    |t| kernel_zk(&params, k, t).unwrap_or(f64::NAN),
                    |t| tangent_limit_profile_dt(&params, t),
                    r,
                )
            });
            Ok((res, format!("alpha is alpha({k})")))
        })?;
        s.add(format!("rho_{k}"), 1e-10, || {
            let expect = (params.p + params.alpha) / (params.p * (params.p - 1.0));
            let rho = phi_k_exponents(&params, k).0;
            Ok(((rho - expect).abs() / expect, format!("rho = {rho}")))
        })?;
    }
    for &eps in &cfg.eps_list {
        let bvp = RadialBvp::new(params, eps)?;
        s.add(format!("pohozaev_exact eps={eps}"), 1e-8, || {
            Ok((pohozaev_residual_ball(&params, &bvp.exact_solution()?, eps)?, String::new()))
        })?;
        if eps >= SHOOTING_POHOZAEV_MIN_EPS {
            s.add(format!("pohozaev_shooting eps={eps}"), 1e-5, || {
                let sol = solve_radial_shooting(&bvp, talenti_constant(&params))?;
                Ok((pohozaev_residual_ball(&params, &sol, eps)?, String::new()))
            })?;
        }
    }
    s.add("decay_exact", 0.01, || {
        let b = sample_bubble(&params, 1.0, log_grid_with_origin(1e-4, cfg.grid.r_inf, 2000))?;
        decay_error(&params, &b, DecayQuantity::Value)
    })?;
    let smallest = cfg.eps_list[cfg.eps_list.len() - 1];
    if smallest <= SHOOTING_DECAY_MAX_EPS {
        s.add(format!("decay_shooting eps={smallest}"), 0.02, || {
            let bvp = RadialBvp::new(params, smallest)?;
            let sol = solve_radial_shooting(&bvp, talenti_constant(&params))?;
            decay_error(&params, &sol, DecayQuantity::ShiftedValue(bvp.shift))
        })?;
    }
    if cfg.verify.random_profiles > 0 {
        s.add("morse_index", 0.0, || {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut mismatches = Vec::new();
            let mut checked = 0;
            while checked < cfg.verify.random_profiles {
                let t = random_triple(&mut rng);
                match (morse_index(&t), negative_direction_count(&t)) {
                    (Ok(m), Ok(c)) => {
                        if m != c {
                            mismatches.push(format!("({}, {}, {}): {m} vs {c}", t.n, t.p, t.alpha));
                        }
                        checked += 1;
                    }
                    (Err(HenonError::Degenerate { .. }), _) | (_, Err(HenonError::Degenerate { .. })) => {}
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            Ok((
                mismatches.len() as f64,
                format!("{checked} random triples, seed {}; {}", cfg.seed, mismatches.join("; ")),
            ))
        })?;
    }
    let passed = s.checks.iter().all(|c| c.pass);
    Ok(Report { params, passed, checks: s.checks })
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    let report = suite(cfg)?;
    let stamp = Stamp::new(cfg)?;
    stamp.write_json("verify.json", &report)?;
    if report.passed {
        Ok(Status::Ok)
    } else {
        Ok(Status::ChecksFailed(
            report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{}: {} > {} {}", c.name, c.value, c.gate, c.detail))
                .collect(),
        ))
    }
}
