//! Flag groups and conversions shared by every subcommand.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use linklda::checkpoint::Checkpoint;
use linklda::corpus::{load_corpus, Corpus};
use linklda::model::{Hyperparams, ModelKind, Strategy};
use linklda::sampler::SamplerConfig;

use crate::error::{CliError, CliResult};

/// Corpus component files. Documents and vocabulary are always required;
/// links and labels are optional and default to an edgeless, unlabeled
/// corpus.
#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Documents file: one `doc_id term_id count` triple per line.
    #[arg(long)]
    pub docs: PathBuf,
    /// Vocabulary file: one term per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Links file: one `src dst [weight]` edge per line.
    #[arg(long)]
    pub links: Option<PathBuf>,
    /// Labels file: one `doc_id label` pair per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

impl CorpusArgs {
    pub fn load(&self) -> CliResult<Corpus> {
        Ok(load_corpus(
            &self.docs,
            &self.vocab,
            self.links.as_deref(),
            self.labels.as_deref(),
        )?)
    }

    /// (role, path) pairs for manifest digests, present files only.
    pub fn digest_pairs(&self) -> Vec<(String, PathBuf)> {
        let mut pairs = vec![
            ("docs".to_string(), self.docs.clone()),
            ("vocab".to_string(), self.vocab.clone()),
        ];
        if let Some(links) = &self.links {
            pairs.push(("links".to_string(), links.clone()));
        }
        if let Some(labels) = &self.labels {
            pairs.push(("labels".to_string(), labels.clone()));
        }
        pairs
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArg {
    Lda,
    Linked,
}

impl ModelArg {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelArg::Lda => ModelKind::Lda,
            ModelArg::Linked => ModelKind::Linked,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyArg {
    Plain,
    Aggregated,
    Limit,
    Sparse,
    AggSparse,
}

impl StrategyArg {
    pub fn strategy(self) -> Strategy {
        match self {
            StrategyArg::Plain => Strategy::Plain,
            StrategyArg::Aggregated => Strategy::Aggregated,
            StrategyArg::Limit => Strategy::Limit,
            StrategyArg::Sparse => Strategy::Sparse,
            StrategyArg::AggSparse => Strategy::AggregatedSparse,
        }
    }
}

/// The sparsity level and the strategy must agree: lazy strategies need
/// `--ell`, the others reject it.
pub fn check_ell(strategy: Strategy, ell: Option<f64>) -> CliResult<()> {
    match (strategy.lazy(), ell) {
        (true, None) => Err(CliError::usage(format!(
            "strategy {:?} needs --ell",
            strategy.as_str()
        ))),
        (false, Some(_)) => Err(CliError::usage(format!(
            "--ell only applies to the sparse strategies, not {:?}",
            strategy.as_str()
        ))),
        _ => Ok(()),
    }
}

/// Usage guard for commands that consume an existing checkpoint.
pub fn require_checkpoint(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "checkpoint {} does not exist",
            path.display()
        )))
    }
}

pub fn config_from_checkpoint(ck: &Checkpoint) -> SamplerConfig {
    let config = SamplerConfig::new(ck.model_kind, ck.strategy)
        .with_seed(ck.seed)
        .with_recount_every(ck.recount_every);
    match ck.sparsity_ell {
        Some(ell) => config.with_ell(ell),
        None => config,
    }
}

pub fn hyper_from_checkpoint(ck: &Checkpoint) -> CliResult<Hyperparams> {
    Ok(Hyperparams::new(
        ck.alpha.clone(),
        ck.beta.clone(),
        ck.gamma_scale,
    )?)
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now()
        .to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Appends `suffix` to the final path component: `out/model.ckpt` +
/// `.log.csv` gives `out/model.ckpt.log.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}
