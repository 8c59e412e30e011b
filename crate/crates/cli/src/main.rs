//! entroscope: turn LLM decoding logs into correctness probabilities and
//! domain-level accuracy estimates.
//!
//! Exit codes: 0 success, 2 input rejection in strict mode, 3 training
//! infeasibility, 1 internal error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "entroscope", version, about)]
struct Cli {
    /// Seed used when a config file does not set one.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract entropy-profile features and UQ baselines from trace JSONL files.
    Extract {
        /// Trace JSONL files.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Feature-cache JSONL output path.
        #[arg(long)]
        out: PathBuf,
        /// Abort on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
        /// Also write the cache as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-domain AUROC table of all 20 statistics, orientation applied.
    Diagnose {
        /// Feature-cache JSONL files (labels required).
        #[arg(required = true)]
        features: Vec<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a correctness model on a group of labeled domains.
    Train {
        /// Feature-cache JSONL files.
        #[arg(required = true)]
        features: Vec<PathBuf>,
        /// Comma-separated training-domain ids.
        #[arg(long)]
        group: String,
        /// Training config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Model JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate per-domain accuracy with a trained model.
    Estimate {
        /// Model JSON produced by `train`.
        model: PathBuf,
        /// Feature-cache JSONL files for the holdout domains.
        #[arg(required = true)]
        features: Vec<PathBuf>,
        /// Report CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the exhaustive train/test composition sweep from a manifest.
    Sweep {
        /// Run manifest JSON (domain caches + sweep config).
        manifest: PathBuf,
        /// Output directory (results.csv, estimates.csv, aggregates.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic labeled trace corpus.
    Synth {
        /// Corpus spec JSON.
        spec: PathBuf,
        /// Trace JSONL output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a sweep results CSV by one experimental factor.
    Report {
        /// results.csv produced by `sweep`.
        results: PathBuf,
        /// Factor: k | classifier | calibration | balance.
        #[arg(long)]
        by: String,
        /// Aggregate CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional (weighted_group_accuracy, aee) pairs CSV for difficulty plots.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract { traces, out, strict, csv } => {
            commands::extract(&traces, &out, strict, csv.as_deref())
        }
        Command::Diagnose { features, out } => commands::diagnose(&features, &out),
        Command::Train { features, group, config, out } => {
            commands::train(&features, &group, &config, &out, cli.seed)
        }
        Command::Estimate { model, features, out } => {
            commands::estimate(&model, &features, &out)
        }
        Command::Sweep { manifest, out } => commands::sweep(&manifest, out.as_deref(), cli.seed),
        Command::Synth { spec, out } => commands::synth(&spec, &out),
        Command::Report { results, by, out, pairs } => {
            commands::report(&results, &by, &out, pairs.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
