//! `bench`: time warmup + measured sweeps per strategy on one corpus and
//! report mean and standard deviation of wall time per iteration.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use linklda::model::{Hyperparams, Strategy};
use linklda::sampler::{GibbsChain, SamplerConfig};

use crate::common::{now_rfc3339, sibling_path, CorpusArgs, ModelArg, StrategyArg};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest_inputs, timing_summary, write_manifest, RunManifest};

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Lda)]
    model: ModelArg,
    /// Strategies to time, comma-separated (default: all five).
    #[arg(long, value_enum, value_delimiter = ',')]
    strategies: Vec<StrategyArg>,
    /// Sparsity levels; every sparse strategy is timed at every level.
    #[arg(long, value_delimiter = ',')]
    ell: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    topics: usize,
    /// Symmetric document-topic prior (default: 50/topics).
    #[arg(long)]
    alpha: Option<f64>,
    /// Symmetric topic-term prior (default: 200/vocabulary size).
    #[arg(long)]
    beta: Option<f64>,
    /// Influence-smoothing scale for the linked model.
    #[arg(long, default_value_t = 10.0)]
    gamma_scale: f64,
    /// Untimed sweeps before measurement starts.
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Timed sweeps per strategy; 0 writes the header only.
    #[arg(long, default_value_t = 10)]
    measured: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timing table CSV: `strategy,ell,iterations,mean_ms,std_ms`.
    #[arg(long)]
    out: PathBuf,
    /// Run manifest (default: `<out>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    let strategies: Vec<Strategy> = if args.strategies.is_empty() {
        vec![
            Strategy::Plain,
            Strategy::Aggregated,
            Strategy::Limit,
            Strategy::Sparse,
            Strategy::AggregatedSparse,
        ]
    } else {
        args.strategies.iter().map(|s| s.strategy()).collect()
    };
    let any_lazy = strategies.iter().any(|s| s.lazy());
    if any_lazy && args.ell.is_empty() {
        return Err(CliError::usage(
            "a sparse strategy was requested but no --ell levels were given",
        ));
    }
    if !any_lazy && !args.ell.is_empty() {
        return Err(CliError::usage(
            "--ell was given but no sparse strategy was requested",
        ));
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

    let mut combos: Vec<(Strategy, Option<f64>)> = Vec::new();
    for &strategy in &strategies {
        if strategy.lazy() {
            for &ell in &args.ell {
                combos.push((strategy, Some(ell)));
            }
        } else {
            combos.push((strategy, None));
        }
    }

    let mut csv = String::from("strategy,ell,iterations,mean_ms,std_ms\n");
    let mut timing = Vec::new();
    for (strategy, ell) in combos {
        let config = SamplerConfig::new(args.model.kind(), strategy).with_seed(args.seed);
        let config = match ell {
            Some(ell) => config.with_ell(ell),
            None => config,
        };
        let mut chain = GibbsChain::new(&corpus, config, hyper.clone())?;
        for _ in 0..args.warmup {
            chain.step()?;
        }
        let label = match ell {
            Some(ell) => format!("{}@{ell}", strategy.as_str()),
            None => strategy.as_str().to_string(),
        };
        if args.measured == 0 {
            println!("{label}: warmup only");
            continue;
        }
        let mut wall = Vec::with_capacity(args.measured);
        for _ in 0..args.measured {
            let started = Instant::now();
            chain.step()?;
            wall.push(started.elapsed().as_secs_f64() * 1e3);
        }
        let summary = timing_summary(label.clone(), &wall);
        let ell_field = ell.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{:.3},{:.3}",
            strategy.as_str(),
            ell_field,
            summary.iterations,
            summary.mean_ms,
            summary.std_ms
        );
        println!(
            "{label}: mean {:.3} ms/iter (std {:.3}) over {} iterations",
            summary.mean_ms, summary.std_ms, summary.iterations
        );
        timing.push(summary);
    }
    fs::write(&args.out, csv)?;

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out, ".manifest.json"));
    let manifest = RunManifest {
        command: "bench".into(),
        config: serde_json::json!({
            "model": args.model.kind().as_str(),
            "strategies": strategies.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            "ell": args.ell,
            "topics": args.topics,
            "alpha": alpha,
            "beta": beta,
            "gamma_scale": args.gamma_scale,
            "warmup": args.warmup,
            "measured": args.measured,
            "out": args.out.display().to_string(),
        }),
        seeds: vec![args.seed],
        inputs: digest_inputs(&args.corpus.digest_pairs())?,
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: timing,
        summary: None,
    };
    write_manifest(&manifest_path, &manifest)?;
    println!("timing table {}", args.out.display());
    Ok(())
}
