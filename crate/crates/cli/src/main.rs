//! Command-line front end for the `linklda` topic-model library: corpus
//! generation, training, benchmarking, evaluation, export, and stacked
//! learning, each as one reproducible run with a manifest.
//!
//! Exit codes: 0 success, 2 usage error, 3 validation error (bad input
//! files or mismatched digests), 4 internal-consistency error.

mod bench;
mod common;
mod error;
mod evaluate;
mod export;
mod manifest;
mod stack;
mod synth;
mod train;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "linklda", version, about = "Topic-model inference over linked documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more Gibbs chains and write a checkpoint.
    Train(train::TrainArgs),
    /// Time sweeps per strategy and write a timing table.
    Bench(bench::BenchArgs),
    /// Score a checkpoint in-sample or on held-out documents.
    Evaluate(evaluate::EvaluateArgs),
    /// Export point estimates (topic mixtures, influence weights) as CSV.
    Export(export::ExportArgs),
    /// Cross-validated stacked-learning AUC evaluation.
    Stack(stack::StackArgs),
    /// Generate a synthetic corpus on disk.
    Synth(synth::SynthArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => train::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Export(args) => export::run(args),
        Command::Stack(args) => stack::run(args),
        Command::Synth(args) => synth::run(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
