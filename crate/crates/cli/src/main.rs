//! `additive-tails`: command-line front end for the additive-core pipelines.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when a numeric guard
//! (range guard, exponent overflow, solver or reconstruction failure) stops
//! the run. Output files are only written on success.

mod catalog;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{parse_u64, parse_x_grid, ExperimentConfig, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] additive_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric_guard() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "additive-tails", version, about = "Large deviations of strongly additive functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Prime counts, mu and B^2 for a spec on an x grid
    SieveStats,
    /// Integer-side tail D_g(x; delta)
    Empirical,
    /// Empirical tail next to every asymptotic form (one row per delta)
    Tails,
    /// Forward pipeline: every tail form in long format, plus Monte Carlo
    Forward,
    /// lambda_f(x; k) next to Lambda(Psi; k)
    Coeffs,
    /// Prime-side moments M_f(x; l) next to the target's
    Moments,
    /// K_f(x; t) and Psi(t) on the merged jump grid
    Distribution,
    /// Saddle parameters eta, rho and their gap
    Saddle,
    /// Monte Carlo tail of Z_Psi(u)
    SampleLevy,
    /// Converse pipeline: coefficients -> moments -> reconstruction
    Converse,
    /// Built-in additive functions and targets
    ListSpecs,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SieveStats => "sieve-stats",
            Command::Empirical => "empirical",
            Command::Tails => "tails",
            Command::Forward => "forward",
            Command::Coeffs => "coeffs",
            Command::Moments => "moments",
            Command::Distribution => "distribution",
            Command::Saddle => "saddle",
            Command::SampleLevy => "sample-levy",
            Command::Converse => "converse",
            Command::ListSpecs => "list-specs",
        }
    }
}

#[derive(Args)]
struct Common {
    /// Additive function, e.g. omega, two-value:0.5,1 (see list-specs)
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Upper limit x (accepts 1e6)
    #[arg(long, global = true)]
    x: Option<String>,
    /// Comma-separated ascending x values
    #[arg(long = "x-grid", global = true)]
    x_grid: Option<String>,
    /// Target law: delta:A or atoms:A@W,...
    #[arg(long, global = true)]
    target: Option<String>,
    /// start:stop:step or a comma list
    #[arg(long, global = true)]
    deltas: Option<String>,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Monte Carlo sample count
    #[arg(long = "mc-n", global = true)]
    mc_n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest admissible delta/B for the saddle forms (default 0.5)
    #[arg(long, global = true)]
    guard: Option<f64>,
    /// Levy intensity for sample-levy (default B^2 of --spec at --x)
    #[arg(long, global = true)]
    u: Option<f64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key = value file; flags given on the command line take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this file
    #[arg(long = "write-config", global = true)]
    write_config: Option<PathBuf>,
}

impl Common {
    fn to_config(&self, command: &str) -> Result<ExperimentConfig, CliError> {
        Ok(ExperimentConfig {
            command: Some(command.to_string()),
            spec: self.spec.clone(),
            x: self.x.as_deref().map(parse_u64).transpose()?,
            x_grid: self.x_grid.as_deref().map(parse_x_grid).transpose()?,
            target: self.target.clone(),
            deltas: self.deltas.clone(),
            kmax: self.kmax,
            mc_n: self.mc_n,
            seed: self.seed,
            guard: self.guard,
            u: self.u,
            format: self.format.as_deref().map(Format::parse).transpose()?,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            threads: self.threads,
        })
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let command = cli.command.name();
    if let Command::ListSpecs = cli.command {
        print!("{}", catalog::listing());
        return Ok(());
    }
    let flags = cli.common.to_config(command)?;
    let cfg = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut base = ExperimentConfig::from_kv(&text)?;
            base.command = None;
            base.merged(&flags)
        }
        None => flags,
    };
    if let Some(threads) = cfg.threads {
        if threads == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let text = commands::run(&cfg)?;
    if let Some(path) = &cli.common.write_config {
        std::fs::write(path, cfg.to_kv()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}")))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
