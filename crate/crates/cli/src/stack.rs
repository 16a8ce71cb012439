//! `stack`: cross-validated stacked-learning evaluation on top of a trained
//! checkpoint's topic mixtures, with link-derived neighbor weights.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use linklda::checkpoint::load_checkpoint;
use linklda::model::ModelKind;
use linklda::sampler::GibbsChain;
use linklda::stacking::{build_edge_weights, train_and_evaluate, StackingConfig, WeightKind};

use crate::common::{now_rfc3339, require_checkpoint, sibling_path, CorpusArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    digest_inputs, validate_checkpoint_inputs, write_manifest, RunManifest,
};

/// Base weighting family; `--reversed` flips the graph direction, turning
/// cocitation into bibliographic coupling.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFamily {
    Cocit,
    Chi,
}

#[derive(Args, Debug)]
pub struct StackArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Neighbor weighting: common in-neighbors (cocit) or inferred
    /// influence weights (chi; linked checkpoints only).
    #[arg(long, value_enum)]
    weights: WeightFamily,
    /// Use the reversed-graph variant of the chosen weighting.
    #[arg(long)]
    reversed: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Stacking layers: 0 = base classifier only.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Seed for the cross-validation fold shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// AUC table CSV: `class,fold,layers,weighting,auc`.
    #[arg(long)]
    out: PathBuf,
    /// Run manifest (default: `<out>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn run(args: StackArgs) -> CliResult<()> {
    require_checkpoint(&args.checkpoint)?;
    let started_at = now_rfc3339();
    let ck = load_checkpoint(&args.checkpoint)?;
    if args.weights == WeightFamily::Chi && ck.model_kind == ModelKind::Lda {
        return Err(CliError::usage(
            "--weights chi uses influence weights, which only a linked-model checkpoint has",
        ));
    }
    let kind = match (args.weights, args.reversed) {
        (WeightFamily::Cocit, false) => WeightKind::Cocitation,
        (WeightFamily::Cocit, true) => WeightKind::ReversedCocitation,
        (WeightFamily::Chi, false) => WeightKind::Chi,
        (WeightFamily::Chi, true) => WeightKind::ReversedChi,
    };
    validate_checkpoint_inputs(&args.checkpoint, &args.corpus.digest_pairs())?;
    let corpus = args.corpus.load()?;
    let chain = GibbsChain::from_checkpoint(&corpus, ck)?;
    let model = chain.estimate();

    let weights = build_edge_weights(kind, corpus.links(), model.chi.as_deref())?;
    let outcome = train_and_evaluate(
        &corpus,
        &model.theta,
        &weights,
        &StackingConfig::new(args.folds, args.seed, args.layers),
    )?;

    let mut csv = String::from("class,fold,layers,weighting,auc\n");
    for row in &outcome.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{:.6}",
            row.class,
            row.fold,
            row.layers,
            row.weighting.as_str(),
            row.auc
        );
    }
    fs::write(&args.out, csv)?;
    println!(
        "macro-average AUC {:.4} (std {:.4}) over {} cells ({} skipped) -> {}",
        outcome.macro_average,
        outcome.std_dev,
        outcome.rows.len(),
        outcome.skipped.len(),
        args.out.display()
    );

    let mut inputs = args.corpus.digest_pairs();
    inputs.push(("checkpoint".to_string(), args.checkpoint.clone()));
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out, ".manifest.json"));
    let manifest = RunManifest {
        command: "stack".into(),
        config: serde_json::json!({
            "checkpoint": args.checkpoint.display().to_string(),
            "weighting": kind.as_str(),
            "folds": args.folds,
            "layers": args.layers,
            "out": args.out.display().to_string(),
        }),
        seeds: vec![args.seed],
        inputs: digest_inputs(&inputs)?,
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: vec![],
        summary: Some(serde_json::json!({
            "macro_average": outcome.macro_average,
            "std_dev": outcome.std_dev,
            "cells": outcome.rows.len(),
            "skipped": outcome
                .skipped
                .iter()
                .map(|(class, fold)| serde_json::json!([class, fold]))
                .collect::<Vec<_>>(),
        })),
    };
    write_manifest(&manifest_path, &manifest)?;
    Ok(())
}
