//! Command-line interface.

mod commands;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::predictors::PredictorKind;
use crate::scm_sim::{ScmParams, SweepParam};

/// Directory that relative `--out` paths resolve against.
pub const OUT_DIR_ENV: &str = "FAIRADJUST_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "fairadjust",
    version,
    about = "Fairness-adjusted decision predictors: simulate, fit, score and evaluate"
)]
pub struct Cli {
    /// Base directory for relative `--out` paths.
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub beta_a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta_s: f64,
    /// Score shift of the male group, on the normalized [0, 1] scale.
    #[arg(long, default_value_t = 0.02)]
    pub lambda: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub intercept: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_male: f64,
}

impl ModelArgs {
    pub fn params(&self) -> ScmParams {
        ScmParams {
            beta_a: self.beta_a,
            beta_s: self.beta_s,
            lambda: self.lambda,
            intercept: self.intercept,
            p_male: self.p_male,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Schema config (TOML) describing a delimited data file.
    #[arg(long, value_name = "PATH", conflicts_with = "simulate")]
    pub config: Option<PathBuf>,
    /// Data file, overriding the config's `path`.
    #[arg(long, value_name = "PATH", requires = "config")]
    pub data: Option<PathBuf>,
    /// Use simulated admissions data instead of a file.
    #[arg(long)]
    pub simulate: bool,
    /// Simulated row count before splitting.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.75)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic admissions dataset.
    Simulate {
        #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit all predictors on the training split and write a model document.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Score a file with a saved model.
    Predict {
        /// Model document written by `fit`.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Rows to score, in the layout the model was fitted on.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Predictors to report; all when omitted.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        predictor: Vec<PredictorKind>,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit on the training split and print the metric table for the test split.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// Histogram bins for the demographic-parity KL.
        #[arg(long, default_value_t = crate::metrics::DEFAULT_BINS)]
        bins: usize,
        /// Simulated data only: use the generating coefficients for the ML,
        /// EO and AA predictors.
        #[arg(long, requires = "simulate")]
        true_params: bool,
        #[arg(long, value_enum, default_value = "text")]
        emit: Emit,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Vary one simulator parameter and aggregate metrics over replicates.
    Sweep {
        /// Parameter to vary: `beta_s` or `lambda`.
        #[arg(long, default_value = "beta_s", value_parser = parse_sweep_param)]
        param: SweepParam,
        /// Comma-separated grid; the parameter's default grid when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        replicates: u64,
        #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
        n_train: u64,
        #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
        n_test: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Score the three reference applicants with ML, EO and AA.
    #[command(name = "repro-table1")]
    ReproTable1 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = crate::experiment::TABLE1_N as u64, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Skip fitting and use the generating coefficients.
        #[arg(long)]
        true_params: bool,
        #[arg(long, value_enum, default_value = "text")]
        emit: Emit,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_kind(s: &str) -> Result<PredictorKind, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Resolves `--out` against the output directory and opens it, or stdout.
pub(crate) fn open_output(
    out: &Option<PathBuf>,
    out_dir: &Option<PathBuf>,
) -> anyhow::Result<Box<dyn Write>> {
    use anyhow::Context;
    match out {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => {
            let path = match out_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    commands::dispatch(cli)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
