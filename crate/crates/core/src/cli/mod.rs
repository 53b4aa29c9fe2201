//! Batch front end: `inmed <subcommand> --config <path> [--out <dir>] [--workers N] [--seed S]`.
//!
//! Failures print `{"error": {"code", "message"}}` on stderr and exit with
//! 2 (validation), 3 (numerical failure) or 4 (missing input).

pub mod experiments;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use experiments::Output;

#[derive(Debug, Parser)]
#[command(name = "inmed", version, about = "Inverse medium problem laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the forward problem and write the internal data
    Forward(CommonArgs),
    /// Recover the potential from internal data
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
        /// directory of a previous forward run
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Perturbation sweeps and Hölder exponent fits
    Stability(CommonArgs),
    /// Frequency function profiles and the K ≤ rH audit
    Frequency(CommonArgs),
    /// Three-ball exponent fit with a held-out audit
    Threeball(CommonArgs),
    /// Weighted interpolation audit
    Interp(CommonArgs),
    /// Ball chains, the boundary cone sequence and propagation of smallness
    Chain(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Forward(c)
            | Command::Stability(c)
            | Command::Frequency(c)
            | Command::Threeball(c)
            | Command::Interp(c)
            | Command::Chain(c) => c,
            Command::Reconstruct { common, .. } => common,
        }
    }
}

/// Loads the config and applies the command-line overrides.
pub fn resolve_config(cmd: &Command) -> Result<ExperimentConfig> {
    let c = cmd.common();
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.output = out.clone();
    }
    if let Some(w) = c.workers {
        cfg.workers = Some(w);
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Command::Reconstruct { data: Some(d), .. } = cmd {
        cfg.data_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cmd: &Command) -> Result<()> {
    let cfg = resolve_config(cmd)?;
    let out = Output::new(&cfg.output, &cfg)?;
    let run = || -> Result<()> {
        match cmd {
            Command::Forward(_) => experiments::run_forward(&cfg, &out).map(drop),
            Command::Reconstruct { .. } => experiments::run_reconstruct(&cfg, &out).map(drop),
            Command::Stability(_) => experiments::run_stability(&cfg, &out).map(drop),
            Command::Frequency(_) => experiments::run_frequency(&cfg, &out).map(drop),
            Command::Threeball(_) => experiments::run_threeball(&cfg, &out).map(drop),
            Command::Interp(_) => experiments::run_interp(&cfg, &out).map(drop),
            Command::Chain(_) => experiments::run_chain(&cfg, &out).map(drop),
        }
    };
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Machine-readable error report.
pub fn error_json(e: &LabError) -> String {
    json!({ "error": { "code": e.code(), "message": e.to_string() } }).to_string()
}

/// Runs the parsed command; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}
