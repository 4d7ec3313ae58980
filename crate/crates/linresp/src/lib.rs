//! Command-line pipelines on top of `linresp-core`: TOML configuration,
//! JSON reports and CSV tables, and command-level parallelism.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use linresp_core::ErrorClass;

use crate::config::{ConfigError, RunConfig};
use crate::report::Outcome;

#[derive(Debug, Parser)]
#[command(name = "linresp", version, about = "Stationary densities and linear response of random interval maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the JSON report and CSV tables (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Monte-Carlo seed (overrides `mc.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent solves and replicas.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Expansion and distortion diagnostics.
    CheckHypotheses,
    /// Stationary density, optionally against an Ulam discretization.
    Density,
    /// Linear response at ε = 0.
    Response,
    /// Finite differences of stationary densities against the response.
    FdCheck,
    /// Response of an LSV system through its first-return map.
    InducedResponse,
    /// Monte-Carlo orbits, histogram and coupled response check.
    Mc,
    /// Second-order remainder of the Gauss-Rényi expansion.
    GaussRenyiExpansion,
    /// Uniform-to-Dirac response against the deterministic one.
    PmHalfCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckHypotheses => "check-hypotheses",
            Command::Density => "density",
            Command::Response => "response",
            Command::FdCheck => "fd-check",
            Command::InducedResponse => "induced-response",
            Command::Mc => "mc",
            Command::GaussRenyiExpansion => "gauss-renyi-expansion",
            Command::PmHalfCheck => "pm-half-check",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] linresp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

impl RunError {
    /// 0 success, 1 bad input, 2 violated hypothesis, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Hypothesis(_) => 2,
            RunError::Core(e) => match e.class() {
                ErrorClass::Input => 1,
                ErrorClass::Hypothesis => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }
}

/// Resolves the configuration from the file and command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(cli.command.name().to_string());
    if let Some(d) = &cli.out_dir {
        cfg.output.dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &RunConfig) -> linresp_core::Result<Outcome> {
    match command {
        Command::CheckHypotheses => commands::check_hypotheses(cfg),
        Command::Density => commands::density(cfg),
        Command::Response => commands::response_cmd(cfg),
        Command::FdCheck => commands::fd_check(cfg),
        Command::InducedResponse => commands::induced_response(cfg),
        Command::Mc => commands::mc(cfg),
        Command::GaussRenyiExpansion => commands::gauss_renyi_expansion(cfg),
        Command::PmHalfCheck => commands::pm_half_check(cfg),
    }
}

/// Runs a command and writes its artifacts. Numerical and hypothesis
/// failures still leave a report describing the error.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    let cfg = resolve_config(cli)?;
    let stem = cli.command.name().replace('-', "_");
    let dir = cfg.output.dir.clone();
    match execute(cli.command, &cfg) {
        Ok(out) => {
            let written = out.write(&dir, &stem)?;
            match out.hypothesis_violation {
                Some(v) => Err(RunError::Hypothesis(v)),
                None => Ok(written),
            }
        }
        Err(e) => {
            if e.class() != ErrorClass::Input {
                Outcome::new(commands::failure_report(&cfg, &e)).write(&dir, &stem)?;
            }
            Err(e.into())
        }
    }
}
