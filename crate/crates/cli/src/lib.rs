//! Command-line experiment runner. See the README for the configuration
//! schema and the columns of each table.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use symdom::ExecMode;

use crate::cache::{resolve_dir, BasisCache, CACHE_ENV};
use crate::commands::{Report, Run};
use crate::config::{LoadedConfig, Overrides};
use crate::output::Table;

#[derive(Debug, Parser)]
#[command(name = "symdom", version, about = "Batch experiments on Hilbert modules over bounded symmetric domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel partial sums and Gram blocks against their oracles.
    Kernel(RunArgs),
    /// Koszul point tests against known joint eigenvalues.
    Spectrum(RunArgs),
    /// Integral vs series calculus, Moebius composition, spectral mapping.
    Calculus(RunArgs),
    /// Schatten norms of commutators for coordinate and Moebius symbols.
    Invariance(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Truncation degrees, comma separated.
    #[arg(long = "D", value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Destination of the summary table, where the command has one.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Basis cache directory. Overrides the environment and the config.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Kernel(a) | Command::Spectrum(a) | Command::Calculus(a) | Command::Invariance(a) => a,
        }
    }
}

/// Reads, overrides and validates the configuration of a run.
pub fn load(args: &RunArgs) -> Result<Run> {
    let raw = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut loaded = LoadedConfig::parse(&args.config.display().to_string(), &raw)?;
    loaded.apply(&Overrides {
        d_list: args.d_list.clone(),
        lambda: args.lambda,
        seed: args.seed,
        out: args.out.clone(),
    });
    loaded.validate()?;
    let mut config = loaded.config;
    if let Some(s) = &args.summary {
        config.output.summary = Some(s.clone());
    }
    let env = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let cache = BasisCache::new(resolve_dir(args.cache_dir.clone(), env, config.cache_dir.clone()));
    let mode = if args.sequential { ExecMode::Sequential } else { ExecMode::default() };
    Ok(Run { config, cache, mode })
}

pub fn execute(command: &Command, run: &Run) -> Result<Report> {
    match command {
        Command::Kernel(_) => commands::kernel(run),
        Command::Spectrum(_) => commands::spectrum(run),
        Command::Calculus(_) => commands::calculus(run),
        Command::Invariance(_) => commands::invariance(run),
    }
}

fn write_table(table: &Table, path: Option<&Path>, fallback: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            table.write_csv(&mut f)?;
            f.flush()?;
        }
        None => table.write_csv(fallback)?,
    }
    Ok(())
}

/// Full pipeline for one invocation.
pub fn run_cli(cli: &Cli) -> Result<()> {
    let run = load(cli.command.args())?;
    let report = execute(&cli.command, &run)?;
    write_table(&report.table, run.config.output.csv.as_deref(), &mut io::stdout().lock())?;
    if let Some(s) = &report.summary {
        write_table(s, run.config.output.summary.as_deref(), &mut io::stderr().lock())?;
    }
    for n in &report.notes {
        eprintln!("{n}");
    }
    Ok(())
}
