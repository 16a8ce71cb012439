//! `train`: run one or more seeded Gibbs chains and write checkpoint,
//! iteration log, and manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use clap::Args;
use linklda::checkpoint::{save_checkpoint, Checkpoint};
use linklda::model::Hyperparams;
use linklda::sampler::{GibbsChain, IterationRecord, SamplerConfig};

use crate::common::{
    check_ell, now_rfc3339, sibling_path, CorpusArgs, ModelArg, StrategyArg,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest_inputs, timing_summary, write_manifest, RunManifest};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Lda)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Plain)]
    strategy: StrategyArg,
    /// Sparsity level for the sparse strategies: roughly length/ell groups
    /// per document are updated per sweep.
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long, default_value_t = 30)]
    topics: usize,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate the in-sample likelihood score every this many iterations
    /// (0 = never); scores land in the iteration log.
    #[arg(long, default_value_t = 0)]
    eval_every: usize,
    /// Checkpoint output path. With --chains C > 1, chain i writes
    /// `<path>.chain<i>` instead.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Iteration log CSV (default: `<checkpoint>.log.csv`; suffixed per
    /// chain like the checkpoint).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Run manifest (default: `<checkpoint>.manifest.json`). Commands that
    /// later consume the checkpoint look for the manifest at the default
    /// location to verify input digests.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Number of independent chains, run concurrently with seeds S, S+1, …
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Symmetric document-topic prior (default: 50/topics).
    #[arg(long)]
    alpha: Option<f64>,
    /// Symmetric topic-term prior (default: 200/vocabulary size).
    #[arg(long)]
    beta: Option<f64>,
    /// Influence-smoothing scale for the linked model.
    #[arg(long, default_value_t = 10.0)]
    gamma_scale: f64,
    /// Rebuild counts from assignments every this many iterations.
    #[arg(long, default_value_t = 25)]
    recount_every: usize,
}

struct ChainOutput {
    seed: u64,
    checkpoint: Checkpoint,
    records: Vec<IterationRecord>,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let strategy = args.strategy.strategy();
    check_ell(strategy, args.ell)?;
    if args.chains == 0 {
        return Err(CliError::usage("--chains must be at least 1"));
    }
    if args.recount_every == 0 {
        return Err(CliError::usage("--recount-every must be at least 1"));
    }
    let started_at = now_rfc3339();
    let corpus = args.corpus.load()?;

    let alpha = args.alpha.unwrap_or(50.0 / args.topics as f64);
    let beta = args.beta.unwrap_or(200.0 / corpus.vocab_size() as f64);
    let hyper = Hyperparams::symmetric(
        args.topics,
        corpus.vocab_size(),
        alpha,
        beta,
        args.gamma_scale,
    )?;
    let base = SamplerConfig::new(args.model.kind(), strategy)
        .with_iterations(args.iters)
        .with_recount_every(args.recount_every);
    let base = match args.ell {
        Some(ell) => base.with_ell(ell),
        None => base,
    };
    let seeds: Vec<u64> = (0..args.chains as u64).map(|i| args.seed + i).collect();

    let results: Vec<CliResult<ChainOutput>> = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let config = base.clone().with_seed(seed);
                let corpus = &corpus;
                let hyper = hyper.clone();
                scope.spawn(move || -> CliResult<ChainOutput> {
                    let mut chain = GibbsChain::new(corpus, config, hyper)?;
                    let records = chain.run(args.iters, args.eval_every)?;
                    Ok(ChainOutput {
                        seed,
                        checkpoint: chain.to_checkpoint(),
                        records,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|handle| handle.join().expect("chain thread panicked"))
            .collect()
    });
    let mut outputs = Vec::with_capacity(results.len());
    for result in results {
        outputs.push(result?);
    }

    let log_base = args
        .log
        .clone()
        .unwrap_or_else(|| sibling_path(&args.checkpoint, ".log.csv"));
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.checkpoint, ".manifest.json"));

    let mut timing = Vec::with_capacity(outputs.len());
    for (index, output) in outputs.iter().enumerate() {
        let (ck_path, log_path) = if args.chains == 1 {
            (args.checkpoint.clone(), log_base.clone())
        } else {
            let suffix = format!(".chain{index}");
            (
                sibling_path(&args.checkpoint, &suffix),
                sibling_path(&log_base, &suffix),
            )
        };
        save_checkpoint(&ck_path, &output.checkpoint)?;
        write_iteration_log(&log_path, &output.records)?;
        let wall: Vec<f64> = output.records.iter().map(|r| r.wall_ms).collect();
        let summary = timing_summary(format!("seed-{}", output.seed), &wall);
        println!(
            "chain seed {}: {} iterations, mean {:.3} ms/iter, checkpoint {}",
            output.seed,
            output.records.len(),
            summary.mean_ms,
            ck_path.display()
        );
        timing.push(summary);
    }

    let manifest = RunManifest {
        command: "train".into(),
        config: serde_json::json!({
            "model": args.model.kind().as_str(),
            "strategy": strategy.as_str(),
            "ell": args.ell,
            "topics": args.topics,
            "iters": args.iters,
            "eval_every": args.eval_every,
            "alpha": alpha,
            "beta": beta,
            "gamma_scale": args.gamma_scale,
            "recount_every": args.recount_every,
            "chains": args.chains,
            "checkpoint": args.checkpoint.display().to_string(),
        }),
        seeds,
        inputs: digest_inputs(&args.corpus.digest_pairs())?,
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: timing,
        summary: None,
    };
    write_manifest(&manifest_path, &manifest)?;
    println!("manifest {}", manifest_path.display());
    Ok(())
}

fn write_iteration_log(path: &Path, records: &[IterationRecord]) -> CliResult<()> {
    let mut text = String::from("iteration,wall_ms,likelihood\n");
    for record in records {
        let likelihood = record
            .likelihood
            .map(|score| format!("{score:.6}"))
            .unwrap_or_default();
        let _ = writeln!(text, "{},{:.3},{}", record.iteration, record.wall_ms, likelihood);
    }
    fs::write(path, text)?;
    Ok(())
}
