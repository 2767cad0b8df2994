//! Command-line front end: configuration, presets, command dispatch and
//! output writing. The binary in `main.rs` is a thin wrapper over [`run`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{resolve_seed, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{write_outputs, Artifact, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    /// Price trajectories and their regime labels.
    Simulate,
    /// Regime, converged-volatility or independence sweeps over a1 or w.
    Sweep,
    /// Volatility growth, fitted and analytic Lyapunov exponents.
    Lyapunov,
    /// Ensemble drift against the random-walk reference, and autocorrelations.
    Independence,
    /// Attractor projection, return histogram and kurtosis.
    Distribution,
    /// Fixed points, Jacobian eigenvalues and the linear reference model.
    Equilibrium,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::Lyapunov => "lyapunov",
            CommandKind::Independence => "independence",
            CommandKind::Distribution => "distribution",
            CommandKind::Equilibrium => "equilibrium",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "chaos-market", version, about = "Simulate and analyse a fuzzy moving-average trading price map")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CommandKind>,

    /// TOML file overriding the defaults (or the preset).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random stream; falls back to the config, then CHAOS_MARKET_SEED.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Named figure preset, e.g. fig2 or figA1.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,

    /// Worker threads; changes speed only.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

/// Everything a run needs once flags, preset and config file are combined.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub command: CommandKind,
    pub preset: Option<&'static str>,
    pub figure: Option<&'static str>,
    pub config: RunConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
}

pub const DEFAULT_OUT: &str = "chaos-market-out";

pub fn resolve(cli: &Cli, env_seed: Option<&str>) -> Result<ResolvedRun> {
    let preset = match &cli.preset {
        Some(name) => Some(presets::preset(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset {name:?}; known presets: {}",
                presets::PRESET_NAMES.join(", ")
            ))
        })?),
        None => None,
    };
    let command = match (cli.command, &preset) {
        (Some(c), Some(p)) if c != p.command => {
            return Err(CliError::Usage(format!(
                "preset {} runs `{}`, not `{}`",
                p.name,
                p.command.name(),
                c.name()
            )))
        }
        (Some(c), _) => c,
        (None, Some(p)) => p.command,
        (None, None) => return Err(CliError::Usage("give a subcommand or --preset".into())),
    };
    let base = preset.as_ref().map(|p| p.config.clone()).unwrap_or_default();
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            base.merged_with(&text)?
        }
        None => base,
    };
    config.seed = Some(resolve_seed(cli.seed, config.seed, env_seed)?);
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    config.out = None;
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    config.validate_for(command)?;
    Ok(ResolvedRun {
        command,
        preset: preset.as_ref().map(|p| p.name),
        figure: preset.as_ref().map(|p| p.figure),
        config,
        out,
        threads: cli.threads,
    })
}

/// Compute all artifacts of a resolved run without touching the disk.
pub fn compute(run: &ResolvedRun) -> Result<commands::CommandOutput> {
    let work = || commands::dispatch(run.command, &run.config);
    match run.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

pub fn execute(run: &ResolvedRun) -> Result<RunReport> {
    let output = compute(run)?;
    let files = write(run, &run.out, &output.artifacts)?;
    match output.failure {
        Some(msg) => Err(CliError::Numeric(msg)),
        None => Ok(RunReport {
            out: run.out.clone(),
            files,
        }),
    }
}

fn write(run: &ResolvedRun, dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    let manifest = Manifest {
        command: run.command,
        preset: run.preset,
        figure: run.figure,
        seed: run.config.seed_value(),
        files: artifacts.iter().map(|a| a.name.clone()).collect(),
        config: &run.config,
    };
    write_outputs(dir, artifacts, &manifest)
}

/// Parse-free entry point used by the binary and the tests.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<RunReport> {
    execute(&resolve(cli, env_seed)?)
}
