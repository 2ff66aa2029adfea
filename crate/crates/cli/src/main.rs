//! Command-line front end: synthetic data, training, evaluation,
//! comparison, cross-validation and forecasting.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lionlstm::forecaster::ModelKind;

use crate::commands::Globals;

#[derive(Debug, Parser)]
#[command(
    name = "lionlstm",
    version,
    about = "Groundwater level forecasting with LSTM networks trained by the Lion Algorithm"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (output file for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input CSV; overrides the configured or recorded data path.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Writes a synthetic monthly series.
    Synth {
        #[arg(long)]
        months: usize,
    },
    /// Trains one model family.
    Train {
        #[arg(long)]
        model: ModelKind,
    },
    /// Scores a trained model on its test split.
    Evaluate {
        /// Path to a `<kind>.model.json` file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Trains and scores all three families on the same split.
    Compare,
    /// K-fold cross-validation over the training windows.
    Crossval {
        /// Families to run; all three when omitted.
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
    },
    /// Recursive multi-step forecast past the end of the data.
    Forecast {
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        data: cli.data,
    };
    let result = match &cli.command {
        Command::Synth { months } => commands::synth(&globals, *months),
        Command::Train { model } => commands::train(&globals, *model),
        Command::Evaluate { model } => commands::evaluate(&globals, model),
        Command::Compare => commands::compare(&globals),
        Command::Crossval { models } => commands::crossval(&globals, models),
        Command::Forecast { model, horizon } => commands::forecast(&globals, model, *horizon),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
