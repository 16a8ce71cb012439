//! `export`: write point estimates from a checkpoint as CSV — per-document
//! topic mixtures always, influence weights on request (linked model only).

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use linklda::checkpoint::load_checkpoint;
use linklda::estimate::{write_chi_csv, write_theta_csv};
use linklda::model::ModelKind;
use linklda::sampler::GibbsChain;

use crate::common::{now_rfc3339, require_checkpoint, sibling_path, CorpusArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    digest_inputs, validate_checkpoint_inputs, write_manifest, RunManifest,
};

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Topic-mixture CSV output: `doc_id,label,theta_0..`.
    #[arg(long)]
    theta: PathBuf,
    /// Influence-weight CSV output (`src,dst,weight`); linked checkpoints only.
    #[arg(long)]
    chi: Option<PathBuf>,
    /// Run manifest (default: `<theta>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn run(args: ExportArgs) -> CliResult<()> {
    require_checkpoint(&args.checkpoint)?;
    let started_at = now_rfc3339();
    let ck = load_checkpoint(&args.checkpoint)?;
    if args.chi.is_some() && ck.model_kind == ModelKind::Lda {
        return Err(CliError::usage(
            "--chi exports influence weights, which only a linked-model checkpoint has",
        ));
    }
    validate_checkpoint_inputs(&args.checkpoint, &args.corpus.digest_pairs())?;
    let corpus = args.corpus.load()?;
    let chain = GibbsChain::from_checkpoint(&corpus, ck)?;
    let model = chain.estimate();

    write_theta_csv(BufWriter::new(File::create(&args.theta)?), &corpus, &model.theta)?;
    println!("theta {}", args.theta.display());
    if let Some(chi_path) = &args.chi {
        let chi = model
            .chi
            .as_ref()
            .expect("linked checkpoints always carry influence mixtures");
        write_chi_csv(BufWriter::new(File::create(chi_path)?), &corpus, chi)?;
        println!("chi {}", chi_path.display());
    }

    let mut inputs = args.corpus.digest_pairs();
    inputs.push(("checkpoint".to_string(), args.checkpoint.clone()));
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.theta, ".manifest.json"));
    let manifest = RunManifest {
        command: "export".into(),
        config: serde_json::json!({
            "checkpoint": args.checkpoint.display().to_string(),
            "theta": args.theta.display().to_string(),
            "chi": args.chi.as_ref().map(|p| p.display().to_string()),
        }),
        seeds: vec![],
        inputs: digest_inputs(&inputs)?,
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: vec![],
        summary: None,
    };
    write_manifest(&manifest_path, &manifest)?;
    Ok(())
}
