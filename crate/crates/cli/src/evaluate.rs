//! `evaluate`: score a trained checkpoint. Without test documents the
//! model is scored in-sample on the training corpus; with them, test
//! assignments are sampled while the training state stays frozen and only
//! the test documents are scored.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use linklda::checkpoint::load_checkpoint;
use linklda::corpus::{load_corpus, Corpus};
use linklda::estimate::{heldout_likelihood, heldout_likelihood_range, unseen_inference};
use linklda::sampler::GibbsChain;

use crate::common::{
    config_from_checkpoint, hyper_from_checkpoint, now_rfc3339, require_checkpoint,
    sibling_path, CorpusArgs,
};
use crate::error::CliResult;
use crate::manifest::{
    digest_inputs, validate_checkpoint_inputs, write_manifest, RunManifest,
};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Held-out documents over the same vocabulary; when given, the score
    /// covers only these documents.
    #[arg(long)]
    test_docs: Option<PathBuf>,
    /// Links among the held-out documents.
    #[arg(long)]
    test_links: Option<PathBuf>,
    /// Sweeps over the held-out documents before scoring.
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Score CSV: `score,positions`.
    #[arg(long)]
    out: PathBuf,
    /// Run manifest (default: `<out>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    require_checkpoint(&args.checkpoint)?;
    let started_at = now_rfc3339();
    validate_checkpoint_inputs(&args.checkpoint, &args.corpus.digest_pairs())?;
    let ck = load_checkpoint(&args.checkpoint)?;
    let model_kind = ck.model_kind;
    let corpus = args.corpus.load()?;

    let (score, positions, mode) = match &args.test_docs {
        None => {
            let chain = GibbsChain::from_checkpoint(&corpus, ck)?;
            let model = chain.estimate();
            let held = heldout_likelihood(&model, &corpus, model_kind)?;
            (held.score, held.position_count, "in-sample")
        }
        Some(test_docs) => {
            let test = load_corpus(
                test_docs,
                &args.corpus.vocab,
                args.test_links.as_deref(),
                None,
            )?;
            let merged = Corpus::concat(&corpus, &test)?;
            let config = config_from_checkpoint(&ck);
            let hyper = hyper_from_checkpoint(&ck)?;
            let result = unseen_inference(&ck.assignments, &merged, &config, &hyper, args.iters)?;
            let held = heldout_likelihood_range(
                &result.model,
                &merged,
                model_kind,
                result.test_start..merged.doc_count(),
            )?;
            (held.score, held.position_count, "held-out")
        }
    };
    fs::write(&args.out, format!("score,positions\n{score:.6},{positions}\n"))?;
    println!("{mode} score {score:.4} over {positions} positions -> {}", args.out.display());

    let mut inputs = args.corpus.digest_pairs();
    inputs.push(("checkpoint".to_string(), args.checkpoint.clone()));
    if let Some(test_docs) = &args.test_docs {
        inputs.push(("test-docs".to_string(), test_docs.clone()));
    }
    if let Some(test_links) = &args.test_links {
        inputs.push(("test-links".to_string(), test_links.clone()));
    }
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out, ".manifest.json"));
    let manifest = RunManifest {
        command: "evaluate".into(),
        config: serde_json::json!({
            "checkpoint": args.checkpoint.display().to_string(),
            "iters": args.iters,
            "mode": mode,
            "out": args.out.display().to_string(),
        }),
        seeds: vec![],
        inputs: digest_inputs(&inputs)?,
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: vec![],
        summary: Some(serde_json::json!({
            "score": score,
            "positions": positions,
            "mode": mode,
        })),
    };
    write_manifest(&manifest_path, &manifest)?;
    Ok(())
}
