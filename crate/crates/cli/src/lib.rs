//! Command-line front end: experiment configs, the synthetic generator and
//! the `run`, `compare`, `tune` and `generate` commands.

pub mod config;
pub mod experiment;
pub mod io;
pub mod synthetic;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tabvote_core::{Averaging, EnsemblePreset};

use config::{ExperimentConfig, Overrides};
use experiment::{ExperimentError, EXIT_CONFIG, EXIT_OK};
use synthetic::SyntheticSpec;

#[derive(Debug, Parser)]
#[command(name = "tabvote", version, about = "Train and compare classifiers on categorical survey data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the ensemble, evaluate it and its members, write all artifacts.
    Run(ExperimentArgs),
    /// Train every configured model on the same split and tabulate metrics.
    Compare(ExperimentArgs),
    /// Random search over MLP hyperparameters.
    Tune {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Number of trials; overrides `tune.n_trials`.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Write a synthetic survey CSV with a planted rule.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Input CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Schema TOML for the input CSV.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ensemble preset: ensemble3 or ensemble6.
    #[arg(long)]
    pub ensemble: Option<EnsemblePreset>,
    /// Averaging for precision/recall/F1: macro or weighted.
    #[arg(long)]
    pub averaging: Option<Averaging>,
    /// Comma-separated ensemble member weights.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output CSV; a `.rule.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    /// Negative-to-positive ratio.
    #[arg(long, default_value_t = 4.0)]
    pub imbalance: f64,
    /// Label noise rate.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
}

impl ExperimentArgs {
    pub fn resolve(self) -> Result<ExperimentConfig, ExperimentError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        config.apply(Overrides {
            data: self.data,
            schema: self.schema,
            out: self.out,
            seed: self.seed,
            ensemble: self.ensemble,
            averaging: self.averaging,
            weights: self.weights,
        });
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = experiment::run(&config)?;
            print!("{}", outcome.report.comparison().to_text());
            println!("artifacts written to {}", outcome.output_dir.display());
        }
        Command::Compare(args) => {
            let config = args.resolve()?;
            let report = experiment::compare(&config)?;
            print!("{}", report.table().to_text());
            println!("artifacts written to {}", config.output_dir.display());
        }
        Command::Tune { args, trials } => {
            let mut config = args.resolve()?;
            if let Some(n) = trials {
                config.tune.n_trials = n;
            }
            let (result, best) = experiment::tune(&config)?;
            println!(
                "best of {} trials: #{} units={:?} dropout={} lr={} val_acc={:.4}",
                result.trials.len(),
                best.trial,
                best.config.units,
                best.config.dropout,
                best.config.learning_rate,
                best.val_score
            );
        }
        Command::Generate(args) => {
            let spec = SyntheticSpec {
                n_rows: args.rows,
                imbalance: args.imbalance,
                noise: args.noise,
                ..Default::default()
            };
            let meta = synthetic::generate_synthetic(&spec, args.seed, &args.out)?;
            println!(
                "wrote {} rows ({} negative, {} positive) to {}; Bayes accuracy {:.4}",
                spec.n_rows,
                meta.n_negative,
                meta.n_positive,
                args.out.display(),
                meta.bayes_accuracy
            );
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
