//! `synth`: write a synthetic corpus to disk for benchmarks and
//! end-to-end runs.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use linklda::corpus::{write_corpus, Corpus};
use linklda::synth::{
    block_topic_corpus, homophily_corpus, mean_within_doc_tf, planted_influence_corpus,
    BlockTopicConfig, HomophilyConfig, PlantedInfluenceConfig,
};

use crate::common::{now_rfc3339, sibling_path};
use crate::error::CliResult;
use crate::manifest::{write_manifest, RunManifest};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Topic-blocked documents with head-heavy term frequencies; no links.
    Block,
    /// Hub documents plus followers that borrow most tokens from their hub.
    Planted,
    /// Two labeled blocks whose links mostly stay within a block.
    Homophily,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Output path prefix: writes `<prefix>.docs` and `<prefix>.vocab`,
    /// plus `<prefix>.links` / `<prefix>.labels` when the generator
    /// produces links or labels.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Documents to generate (block and homophily kinds).
    #[arg(long, default_value_t = 500)]
    docs: usize,
    /// Vocabulary size (block kind).
    #[arg(long, default_value_t = 1000)]
    vocab: usize,
    /// Generator topics (block kind).
    #[arg(long, default_value_t = 10)]
    topics: usize,
    /// Tokens per document (block kind).
    #[arg(long, default_value_t = 200)]
    doc_length: u32,
    /// Hub documents (planted kind).
    #[arg(long, default_value_t = 10)]
    hubs: usize,
    /// Followers per hub (planted kind).
    #[arg(long, default_value_t = 9)]
    followers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run manifest (default: `<prefix>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn run(args: SynthArgs) -> CliResult<()> {
    let started_at = now_rfc3339();
    let corpus: Corpus = match args.kind {
        SynthKind::Block => block_topic_corpus(
            &BlockTopicConfig::new(args.docs, args.vocab, args.topics, args.doc_length)
                .with_seed(args.seed),
        )?,
        SynthKind::Planted => {
            planted_influence_corpus(
                &PlantedInfluenceConfig::new(args.hubs, args.followers).with_seed(args.seed),
            )?
            .corpus
        }
        SynthKind::Homophily => {
            homophily_corpus(&HomophilyConfig::new(args.docs).with_seed(args.seed))?
        }
    };

    let docs_path = sibling_path(&args.out_prefix, ".docs");
    let vocab_path = sibling_path(&args.out_prefix, ".vocab");
    let has_links = corpus.links().edges().next().is_some();
    let has_labels = corpus.labels().iter().any(Option::is_some);
    let links_path = has_links.then(|| sibling_path(&args.out_prefix, ".links"));
    let labels_path = has_labels.then(|| sibling_path(&args.out_prefix, ".labels"));
    write_corpus(
        &corpus,
        &docs_path,
        &vocab_path,
        links_path.as_deref(),
        labels_path.as_deref(),
    )?;

    let mut written = vec![docs_path.display().to_string(), vocab_path.display().to_string()];
    written.extend(links_path.iter().map(|p| p.display().to_string()));
    written.extend(labels_path.iter().map(|p| p.display().to_string()));
    println!(
        "{} documents, {} terms, {} positions, mean within-document term frequency {:.2}",
        corpus.doc_count(),
        corpus.vocab_size(),
        corpus.total_positions(),
        mean_within_doc_tf(&corpus)
    );
    println!("wrote {}", written.join(", "));

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out_prefix, ".manifest.json"));
    let manifest = RunManifest {
        command: "synth".into(),
        config: serde_json::json!({
            "kind": format!("{:?}", args.kind).to_lowercase(),
            "docs": args.docs,
            "vocab": args.vocab,
            "topics": args.topics,
            "doc_length": args.doc_length,
            "hubs": args.hubs,
            "followers": args.followers,
            "out_prefix": args.out_prefix.display().to_string(),
        }),
        seeds: vec![args.seed],
        inputs: vec![],
        started_at,
        finished_at: now_rfc3339(),
        iteration_timing: vec![],
        summary: Some(serde_json::json!({
            "documents": corpus.doc_count(),
            "vocab": corpus.vocab_size(),
            "positions": corpus.total_positions(),
            "mean_within_doc_tf": mean_within_doc_tf(&corpus),
            "written": written,
        })),
    };
    write_manifest(&manifest_path, &manifest)?;
    Ok(())
}
