//! The `henon` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use henon_core::continuation::SectorKind;
use henon_core::HenonError;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{ExperimentConfig, Overrides};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bad input: malformed config, inadmissible parameters, refused sector.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// How a command that produced its outputs ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    ChecksFailed(Vec<String>),
    NumericalFailure(String),
}

#[derive(Debug, Parser)]
#[command(name = "henon", version, about = "Bubbles, spectra, bifurcation exponents and non-radial branches")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Comma-separated harmonic degrees.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// `zonal` or `product:L`.
    #[arg(long, global = true, value_parser = config::parse_sector)]
    pub sector: Option<SectorKind>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form identities: residuals, kernels, Pohozaev, decay, Morse index.
    Verify,
    /// Angular eigenvalues on the ball.
    Spectrum,
    /// Degenerate exponents alpha_k^eps and their convergence.
    Bifurcate,
    /// Continue the non-radial branch from a bifurcation point.
    Branch {
        /// JSON-lines point records written by `bifurcate`.
        #[arg(long)]
        point: Option<PathBuf>,
        /// Compare against the explicit family (N = 4, p = 2, product:2, k = 2).
        #[arg(long)]
        family: bool,
    },
    /// Closed-form values at given radii.
    Eval {
        /// Radii; repeat or comma-separate.
        #[arg(long = "r", value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            eps: self.eps.clone(),
            k: self.k.clone(),
            alpha: self.alpha,
            sector: self.sector,
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(cli.common.config.as_deref())?;
    cfg.apply(&cli.common.overrides());
    match &cli.command {
        Command::Branch { family: true, .. } => cfg.branch.family = true,
        Command::Eval { radii, lambda } => {
            if let Some(r) = radii {
                cfg.eval.radii = r.clone();
            }
            if let Some(l) = lambda {
                cfg.eval.lambda = *l;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> anyhow::Result<Status> {
    let cfg = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs).build()?;
    pool.install(|| match &cli.command {
        Command::Verify => commands::verify::run(&cfg),
        Command::Spectrum => commands::spectrum::run(&cfg),
        Command::Bifurcate => commands::bifurcate::run(&cfg),
        Command::Branch { point, .. } => commands::branch::run(&cfg, point.as_deref()),
        Command::Eval { .. } => commands::eval::run(&cfg),
    })
}

/// 2 for bad input, 3 for numerical breakdown.
pub fn error_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(h) = cause.downcast_ref::<HenonError>() {
            return if h.is_usage() { 2 } else { 3 };
        }
    }
    3
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed(items)) => {
            for item in items {
                eprintln!("check failed: {item}");
            }
            ExitCode::from(1)
        }
        Ok(Status::NumericalFailure(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            let code = error_code(&e);
            let kind = if code == 2 { "usage error" } else { "numerical failure" };
            eprintln!("{kind}: {e:#}");
            ExitCode::from(code)
        }
    }
}
