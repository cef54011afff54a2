//! Command-line front end: ingestion, estimation, simulation studies and
//! reports, each writing reproducible artifacts to an output directory.
//!
//! Every run that reads data writes a `manifest.toml` next to its artifacts.
//! The manifest is an ordinary config file with the input's SHA-256 filled
//! in; `ratingdml rerun <manifest> --out <dir>` repeats the run and produces
//! byte-identical artifacts.

pub mod artifacts;
pub mod config;
pub mod estimate;
pub mod report;
pub mod simulate;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ratingdml::dataset::{OutcomeKind, TreatmentGranularity};
use ratingdml::dml::Algorithm;
use ratingdml::inference::WeightScheme;

use config::{Command, RunConfig};

/// Environment variable bounding the number of worker threads.
pub const WORKERS_ENV: &str = "RATINGDML_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "ratingdml",
    version,
    about = "Double machine learning for rating effects on leverage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Filter a firm-year file and write the estimation sample.
    Ingest(RunArgs),
    /// Print leverage quartiles by rating group.
    Summarize(RunArgs),
    /// Estimate rating effects and simultaneous inference.
    Estimate(RunArgs),
    /// Run a Monte Carlo study.
    Simulate {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize and overlay earlier estimate runs.
    Report {
        /// Comma-separated run directories.
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags shared by the data commands; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub outcome: Option<OutcomeKind>,
    /// Rating granularity (`--by` is accepted for `summarize`).
    #[arg(long, alias = "by")]
    pub granularity: Option<TreatmentGranularity>,
    #[arg(long)]
    pub learner_g: Option<String>,
    #[arg(long)]
    pub learner_m: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Multiplier bootstrap draws.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub weights: Option<WeightScheme>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub include_intcov: bool,
    #[arg(long)]
    pub stratify_folds: bool,
    #[arg(long)]
    pub bootstrap_se: bool,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone().into();
                }
            )*};
        }
        set!(
            data,
            out,
            outcome,
            granularity,
            learner_g,
            learner_m,
            folds,
            reps,
            algorithm,
            alpha,
            bootstrap,
            weights,
            seed
        );
        c.include_intcov |= self.include_intcov;
        c.stratify_folds |= self.stratify_folds;
        c.bootstrap_se |= self.bootstrap_se;
        c.validate()?;
        Ok(c)
    }
}

/// Sizes the global thread pool from [`WORKERS_ENV`] when it is set.
pub fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = value
        .trim()
        .parse()
        .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{value}`"))?;
    if workers == 0 {
        bail!("{WORKERS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("cannot size the worker pool")?;
    Ok(())
}

/// Printable output and whether every declared check passed.
pub struct Outcome {
    pub text: String,
    pub success: bool,
    pub problems: Vec<String>,
}

fn ok(text: String) -> Outcome {
    Outcome {
        text,
        success: true,
        problems: Vec::new(),
    }
}

pub fn dispatch(config: &RunConfig, command: Command) -> Result<Outcome> {
    match command {
        Command::Ingest => estimate::run_ingest(config).map(ok),
        Command::Summarize => estimate::run_summarize(config).map(ok),
        Command::Estimate => {
            let (text, all_fitted) = estimate::run_estimate(config)?;
            Ok(Outcome {
                text,
                success: all_fitted,
                problems: if all_fitted {
                    Vec::new()
                } else {
                    vec!["some treatments could not be estimated".into()]
                },
            })
        }
        Command::Simulate | Command::Report => {
            bail!("`{command:?}` runs from a study file or run directories, not a manifest")
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        CliCommand::Ingest(args) => dispatch(&args.resolve()?, Command::Ingest),
        CliCommand::Summarize(args) => dispatch(&args.resolve()?, Command::Summarize),
        CliCommand::Estimate(args) => dispatch(&args.resolve()?, Command::Estimate),
        CliCommand::Simulate { study, out } => {
            let file = simulate::StudyFile::load(&study)?;
            let outcome = simulate::execute(&file)?;
            simulate::write_study(&out, &file, &outcome)?;
            Ok(Outcome {
                text: simulate::summary_text(&outcome),
                success: outcome.failures.is_empty(),
                problems: outcome.failures,
            })
        }
        CliCommand::Report { runs, out } => report::run_report(&runs, &out).map(ok),
        CliCommand::Rerun { manifest, out } => {
            let mut config = RunConfig::load(&manifest)?;
            let command = config
                .command
                .context("manifest does not record a command")?;
            config.out = Some(out);
            config.validate()?;
            dispatch(&config, command)
        }
    }
}
