//! `steer`: train cache n-gram models, generate guided synthetic datasets,
//! evaluate real/synthetic pairs, and sweep guidance hyperparameters.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 I/O or
//! backend error, 4 internal invariant violation.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{
    cmd_evaluate, cmd_generate, cmd_sweep, cmd_train, EvaluateFlags, GenerateFlags, SweepFlags,
    TrainFlags,
};
use config::FileConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> CliError {
        CliError { code: 2, message }
    }

    pub fn io(message: String) -> CliError {
        CliError { code: 3, message }
    }

    pub fn internal(message: String) -> CliError {
        CliError { code: 4, message }
    }
}

impl From<steer_core::Error> for CliError {
    fn from(err: steer_core::Error) -> CliError {
        use steer_core::Error as E;
        let code = match &err {
            E::Io(_)
            | E::NetworkTimeout(_)
            | E::RetryExhausted { .. }
            | E::ShapeMismatch { .. }
            | E::Format(_)
            | E::FormatVersionMismatch { .. }
            | E::MalformedRecord { .. } => 3,
            E::AllMasked
            | E::NonFiniteInput
            | E::NonFiniteEmbedding
            | E::ZeroEmbedding
            | E::ZeroMeanVector
            | E::MissingEmbeddings(_) => 4,
            _ => 2,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "steer", version, about = "Guided decoding toolkit")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every derived random stream.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a cache n-gram model on a line-per-example corpus.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Corpus used only for vocabulary construction (defaults to
        /// --corpus); lets a model pair share one vocabulary.
        #[arg(long)]
        vocab_corpus: Option<PathBuf>,
        /// Which side of the model pair this is: `base` or `domain`.
        #[arg(long)]
        role: Option<String>,
        /// Tokenisation: `char` or `word`.
        #[arg(long)]
        vocab_mode: Option<String>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Generate a synthetic dataset with guided decoding.
    Generate {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Number of examples to generate.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        instruction: Option<String>,
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        base: Option<PathBuf>,
        /// Real dataset used as the negative-prompt pool.
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        allow_extrapolation: bool,
        #[arg(long)]
        negative_count: Option<usize>,
        #[arg(long)]
        max_new_tokens: Option<usize>,
        /// greedy, top_k, nucleus, or contrastive_search.
        #[arg(long)]
        method: Option<String>,
    },
    /// Evaluate a real/synthetic dataset pair.
    Evaluate {
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        synth: Option<PathBuf>,
        /// Format of the real dataset: `lines` or `jsonl`.
        #[arg(long)]
        format: Option<String>,
    },
    /// Run a (gamma, eta) grid sweep and emit one CSV row per cell.
    Sweep {
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        samples_per_cell: Option<usize>,
        #[arg(long)]
        generation_budget: Option<usize>,
        /// Retain the per-cell synthetic datasets next to the CSV.
        #[arg(long)]
        keep_datasets: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or(file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    match cli.command {
        Command::Train {
            corpus,
            vocab_corpus,
            role,
            vocab_mode,
            order,
        } => cmd_train(
            TrainFlags {
                corpus,
                vocab_corpus,
                role,
                vocab_mode,
                order,
            },
            &file,
            seed,
            &out,
        ),
        Command::Generate {
            gamma,
            eta,
            count,
            instruction,
            domain,
            base,
            real,
            allow_extrapolation,
            negative_count,
            max_new_tokens,
            method,
        } => cmd_generate(
            GenerateFlags {
                gamma,
                eta,
                count,
                instruction,
                domain,
                base,
                real,
                allow_extrapolation,
                negative_count,
                max_new_tokens,
                method,
            },
            &file,
            seed,
            &out,
        ),
        Command::Evaluate { real, synth, format } => cmd_evaluate(
            EvaluateFlags {
                real,
                synth,
                format,
            },
            &file,
            seed,
            &out,
        ),
        Command::Sweep {
            domain,
            base,
            real,
            samples_per_cell,
            generation_budget,
            keep_datasets,
        } => cmd_sweep(
            SweepFlags {
                domain,
                base,
                real,
                samples_per_cell,
                generation_budget,
                keep_datasets,
            },
            &file,
            seed,
            &out,
        ),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message);
        std::process::exit(err.code);
    }
}
