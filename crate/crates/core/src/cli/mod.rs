//! Command-line pipeline: `synth`, `fit`, `evaluate`, `augment`, `report`.
//!
//! Every command reads one TOML run configuration (see [`RunConfig`]) and
//! writes below the output directory. Exit codes: 0 success, 2 config
//! error, 3 data validation error, 4 numerical failure.

mod commands;
mod config;
mod error;

pub use commands::{
    cmd_augment, cmd_evaluate, cmd_fit, cmd_report, cmd_synth, FitSummaryRow, Provenance, ReliabilityRow, Report,
};
pub use config::{
    DataSection, ExpectationSection, FeatureSetSpec, FusionSection, ReportFormat, ReportSection, Resolved, RunConfig,
    SceneSet,
};
pub use error::CliError;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "ctxprior", version, about = "Scene-context expectation models and detector fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with planted truth.
    Synth,
    /// Fit and save expectation models.
    Fit,
    /// Cross-validated spec tables with noise ceiling.
    Evaluate,
    /// Fuse detector scores with expectations.
    Augment,
    /// Reliability, nontarget weights and transfer analysis.
    Report,
}

/// Loads the configuration and applies flag overrides.
pub fn resolve(cli: &Cli) -> Result<Resolved, CliError> {
    let (config, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (RunConfig::load(path)?, base)
        }
        None => {
            let seed = cli
                .seed
                .ok_or_else(|| CliError::Config("a seed is required: pass --config or --seed".into()))?;
            let text = format!("seed = {seed}");
            (RunConfig::parse(&text)?, PathBuf::new())
        }
    };
    config.resolve(&base, cli.seed, cli.out.clone())
}

/// Runs one command and returns the files it wrote.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let run = resolve(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Synth => cmd_synth(&run),
        Command::Fit => cmd_fit(&run),
        Command::Evaluate => cmd_evaluate(&run),
        Command::Augment => cmd_augment(&run),
        Command::Report => cmd_report(&run),
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
