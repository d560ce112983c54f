//! `scratchq`: label tablet traces, extract features, train and evaluate
//! scratch models, and summarize the results as CSV.
//!
//! Exit codes: 0 ok, 2 bad input, 3 numeric failure, 4 a cross-validation
//! fold failed, 5 model artifact mismatch.

mod commands;
mod output;
mod reports;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scratchq::eval::EvalError;
use scratchq::io::IoError;
use scratchq::mlp::MlpError;
use scratchq::pipeline::PipelineError;

use settings::Common;

#[derive(Debug, Parser)]
#[command(name = "scratchq", version, about = "Scratch intensity and detection from ring sensor data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Power labels from tablet traces (session manifests or tablet CSVs).
    Label {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Participant id for tablet CSV inputs; defaults to the file stem.
        #[arg(long)]
        participant: Option<String>,
        /// Block length in seconds for tablet CSV inputs.
        #[arg(long, default_value_t = 10.0)]
        block_length: f64,
    },
    /// Unnormalized spectral features for every sliding window.
    Featurize {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Label CSV to join; without it sessions with a tablet are labeled on the fly.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a scaler and model on every labeled row of a feature file.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV; defaults to <out>.history.csv.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Leave-one-subject-out cross-validation.
    Loso {
        #[arg(long)]
        features: PathBuf,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sliding-window predictions for sessions.
    Predict {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        intensity_model: Option<PathBuf>,
        #[arg(long)]
        detection_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Statistical tests on CSV columns or instructed-level predictions.
    Stats {
        #[command(subcommand)]
        test: reports::StatsCommand,
    },
    /// Summary tables from a directory holding labels.csv and/or predictions.csv.
    Report {
        dir: PathBuf,
        /// Output directory; defaults to DIR.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic tablet traces and sessions from JSON specs.
    Synth {
        #[command(subcommand)]
        kind: commands::SynthCommand,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Label {
            inputs,
            out,
            participant,
            block_length,
        } => commands::label(&inputs, &out, participant.as_deref(), block_length),
        Command::Featurize {
            manifests,
            out,
            labels,
            common,
        } => commands::featurize(&manifests, &out, labels.as_deref(), &common.resolve()?),
        Command::Train {
            features,
            out,
            history,
            common,
        } => commands::train(&features, &out, history, &common.resolve()?),
        Command::Loso { features, out, common } => commands::loso(&features, &out, &common.resolve()?),
        Command::Predict {
            manifests,
            intensity_model,
            detection_model,
            out,
            common,
        } => commands::predict(
            &manifests,
            intensity_model.as_deref(),
            detection_model.as_deref(),
            &out,
            &common.resolve()?,
        ),
        Command::Stats { test } => reports::stats(test),
        Command::Report { dir, out } => reports::report(&dir, out.as_deref().unwrap_or(&dir)),
        Command::Synth { kind } => commands::synth(kind),
    }
}

/// Maps the first recognized error in the chain onto the exit-code taxonomy.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return match e {
                IoError::ChecksumFailure
                | IoError::VersionUnsupported { .. }
                | IoError::TaskMismatch { .. }
                | IoError::ArtifactMalformed(_) => 5,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Fold { .. } => 4,
                _ => 2,
            };
        }
        if let Some(PipelineError::Mlp(MlpError::NonFiniteLoss { .. })) = cause.downcast_ref::<PipelineError>() {
            return 3;
        }
        if let Some(MlpError::NonFiniteLoss { .. }) = cause.downcast_ref::<MlpError>() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
