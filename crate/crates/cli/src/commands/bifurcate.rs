//! Bifurcation diagram: `alpha_k^eps` for every `(k, eps)`, resumable through a manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use henon_core::bifurcation::{alpha_k_offset, locate_alpha_k, BifurcationConfig};
use henon_core::numerics::fit_line;
use henon_core::{BifurcationPoint, ParamFamily};

use crate::output::Stamp;
use crate::{ExperimentConfig, Status};

pub const POINTS_FILE: &str = "bifurcation.jsonl";
pub const MANIFEST_FILE: &str = "bifurcation.manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    #[serde(flatten)]
    pub point: BifurcationPoint,
    /// `alpha_k^eps - alpha(k)` from the eigenvalue shift.
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StampedRecord {
    version: String,
    config_hash: String,
    #[serde(flatten)]
    record: PointRecord,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    version: String,
    config_hash: String,
    /// Completed `(k, eps)` work items.
    completed: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramRow {
    pub eps: f64,
    pub k: u32,
    pub alpha_k_eps: f64,
    pub alpha_k: f64,
    pub error: f64,
    pub offset: f64,
    pub bisection_error: f64,
    pub mu_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeSummary {
    pub k: u32,
    pub alpha_k: f64,
    pub errors_decrease: bool,
    /// Slope of `ln |offset|` against `ln eps`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub degrees: Vec<DegreeSummary>,
}

type Key = (u32, u64);

fn key(k: u32, eps: f64) -> Key {
    (k, eps.to_bits())
}

/// Records of a previous run with the same config hash.
fn resume(stamp: &Stamp) -> BTreeMap<Key, PointRecord> {
    let mut done = BTreeMap::new();
    let Ok(text) = fs::read_to_string(stamp.path(MANIFEST_FILE)) else {
        return done;
    };
    let Ok(manifest) = serde_json::from_str::<Manifest>(&text) else {
        return done;
    };
    if manifest.config_hash != stamp.config_hash {
        return done;
    }
    let wanted: Vec<Key> = manifest.completed.iter().map(|&(k, e)| key(k, e)).collect();
    if let Ok(lines) = fs::read_to_string(stamp.path(POINTS_FILE)) {
        for line in lines.lines() {
            if let Ok(r) = serde_json::from_str::<StampedRecord>(line) {
                let kk = key(r.record.point.k, r.record.point.eps);
                if r.config_hash == stamp.config_hash && wanted.contains(&kk) {
                    done.insert(kk, r.record);
                }
            }
        }
    }
    done
}

/// Appends finished points and keeps the manifest in step with them.
struct Collector<'a> {
    stamp: &'a Stamp,
    completed: Vec<(u32, f64)>,
}

impl Collector<'_> {
    fn push(&mut self, record: &PointRecord) -> anyhow::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.stamp.path(POINTS_FILE))?;
        writeln!(f, "{}", self.stamp.line(record)?)?;
        self.completed.push((record.point.k, record.point.eps));
        self.write_manifest()
    }

    fn write_manifest(&self) -> anyhow::Result<()> {
        let m = Manifest {
            version: self.stamp.version.to_string(),
            config_hash: self.stamp.config_hash.clone(),
            completed: self.completed.clone(),
        };
        fs::write(self.stamp.path(MANIFEST_FILE), serde_json::to_string(&m)? + "\n")?;
        Ok(())
    }
}

fn locate(family: &ParamFamily, k: u32, eps: f64, cfg: &BifurcationConfig) -> anyhow::Result<PointRecord> {
    let point = locate_alpha_k(family, k, eps, cfg)?;
    let offset = alpha_k_offset(family, k, eps, cfg.log_step)?;
    Ok(PointRecord { point, offset })
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    let family = cfg.params.family();
    let bcfg = BifurcationConfig { log_step: cfg.grid.log_step, root_tol: cfg.tolerances.root, ..Default::default() };
    let stamp = Stamp::new(cfg)?;
    let done = resume(&stamp);
    let mut ks = cfg.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    let items: Vec<(u32, f64)> = ks.iter().flat_map(|&k| cfg.eps_list.iter().map(move |&e| (k, e))).collect();
    let todo: Vec<(u32, f64)> = items.iter().copied().filter(|&(k, e)| !done.contains_key(&key(k, e))).collect();
    if todo.len() < items.len() {
        eprintln!("resuming: {} of {} (k, eps) rows already complete", items.len() - todo.len(), items.len());
    }

    // rewrite the partial files so that only records of this config remain
    let collector = Mutex::new(Collector { stamp: &stamp, completed: Vec::new() });
    {
        let mut c = collector.lock().expect("collector");
        fs::write(stamp.path(POINTS_FILE), "")?;
        for r in done.values() {
            c.push(r)?;
        }
        c.write_manifest()?;
    }
    let fresh: Vec<PointRecord> = todo
        .par_iter()
        .map(|&(k, eps)| {
            let r = locate(&family, k, eps, &bcfg)?;
            collector.lock().expect("collector").push(&r)?;
            Ok(r)
        })
        .collect::<anyhow::Result<_>>()?;

    let mut all: BTreeMap<Key, PointRecord> = done;
    for r in fresh {
        all.insert(key(r.point.k, r.point.eps), r);
    }
    let ordered: Vec<PointRecord> = items.iter().map(|&(k, e)| all[&key(k, e)].clone()).collect();
    let rows: Vec<DiagramRow> = ordered
        .iter()
        .map(|r| DiagramRow {
            eps: r.point.eps,
            k: r.point.k,
            alpha_k_eps: r.point.alpha_k_eps,
            alpha_k: r.point.limit_alpha,
            error: r.offset.abs(),
            offset: r.offset,
            bisection_error: r.point.error(),
            mu_residual: r.point.mu_residual,
        })
        .collect();
    let degrees = ks
        .iter()
        .map(|&k| {
            let sub: Vec<&DiagramRow> = rows.iter().filter(|r| r.k == k).collect();
            let (x, y): (Vec<f64>, Vec<f64>) =
                sub.iter().filter(|r| r.error > 0.0).map(|r| (r.eps.ln(), r.error.ln())).unzip();
            DegreeSummary {
                k,
                alpha_k: sub[0].alpha_k,
                errors_decrease: sub.windows(2).all(|w| w[1].error < w[0].error),
                rate: (x.len() >= 2).then(|| fit_line(&x, &y).slope),
            }
        })
        .collect();
    stamp.write_jsonl(POINTS_FILE, &ordered)?;
    stamp.write_csv("bifurcation.csv", &rows)?;
    stamp.write_json("bifurcation_summary.json", &Summary { degrees })?;
    Collector { stamp: &stamp, completed: items }.write_manifest()?;
    Ok(Status::Ok)
}

/// Reads point records written by [`run`].
pub fn read_points(text: &str) -> anyhow::Result<Vec<PointRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str::<StampedRecord>(l)?.record))
        .collect()
}
