//! Point estimates from count tables, held-out likelihood scoring, unseen
//! inference for new documents, and CSV export of the estimated quantities.

use std::io::Write;
use std::ops::Range;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::model::{
    derived_rng, influence_members, init_document, AssignmentState, CountState, Hyperparams,
    InfluenceSets, ModelKind, TopicModel,
};
use crate::sampler::{GibbsChain, SamplerConfig};

/// Default number of sampling iterations for unseen inference.
pub const UNSEEN_ITERATIONS_DEFAULT: usize = 20;

/// Smoothed per-topic term distributions; one row per topic, summing to 1.
pub fn estimate_phi(counts: &CountState, hyper: &Hyperparams) -> DenseMatrix {
    let k = hyper.topic_count();
    let vocab = counts.term_topic().rows();
    let beta = hyper.beta();
    let mut phi = DenseMatrix::zeros(k, vocab);
    for z in 0..k {
        let denom = counts.topic_total()[z] + hyper.beta_sum();
        let row = phi.row_mut(z);
        for (w, slot) in row.iter_mut().enumerate() {
            *slot = (counts.term_topic().get(w, z) + beta[w]) / denom;
        }
    }
    phi
}

/// Smoothed per-document topic mixtures; one row per document, summing to 1.
/// Under the linked model the counts credit each token to its influencing
/// document, so a row describes the topics a document is credited with.
pub fn estimate_theta(counts: &CountState, hyper: &Hyperparams) -> DenseMatrix {
    let m = counts.doc_topic().rows();
    let k = hyper.topic_count();
    let alpha = hyper.alpha();
    let mut theta = DenseMatrix::zeros(m, k);
    for d in 0..m {
        let denom = counts.influenced_total()[d] + hyper.alpha_sum();
        let src = counts.doc_topic().row(d);
        let dst = theta.row_mut(d);
        for z in 0..k {
            dst[z] = (src[z] + alpha[z]) / denom;
        }
    }
    theta
}

/// Smoothed influence mixtures: per document, a distribution over its
/// influence set (itself first, then its outlink targets), summing to 1.
pub fn estimate_chi(counts: &CountState, infl: &InfluenceSets) -> Vec<Vec<f64>> {
    (0..infl.doc_count())
        .map(|d| {
            let m_row = &counts.doc_influencer()[d];
            let total: f64 = m_row.iter().sum::<f64>() + infl.gamma_sum(d);
            m_row
                .iter()
                .zip(infl.gamma(d))
                .map(|(&m, &g)| (m + g) / total)
                .collect()
        })
        .collect()
}

/// All point estimates in one struct; `chi` is present exactly when
/// influence sets are given.
pub fn estimate_model(
    counts: &CountState,
    hyper: &Hyperparams,
    infl: Option<&InfluenceSets>,
) -> TopicModel {
    TopicModel {
        phi: estimate_phi(counts, hyper),
        theta: estimate_theta(counts, hyper),
        chi: infl.map(|i| estimate_chi(counts, i)),
    }
}

/// Held-out likelihood summary. `score` is the geometric-mean inverse token
/// likelihood `exp(-(1/|P|) * sum log p(w))`: lower is better, and a uniform
/// model over `n` terms scores exactly `n`.
#[derive(Debug, Clone)]
pub struct HeldoutScore {
    pub score: f64,
    pub position_count: u64,
    /// Per document of the scored corpus: the sum of `log p(w)` over its
    /// positions (zero for documents outside the scored range).
    pub doc_log_likelihood: Vec<f64>,
}

/// Scores every document of `heldout`; see [`heldout_likelihood_range`].
pub fn heldout_likelihood(
    model: &TopicModel,
    heldout: &Corpus,
    model_kind: ModelKind,
) -> Result<HeldoutScore> {
    heldout_likelihood_range(model, heldout, model_kind, 0..heldout.doc_count())
}

/// Scores the documents of `heldout` in `docs` against `model`, whose
/// `theta` rows (and `chi` entries, for the linked model) must align with
/// the corpus documents. Token probabilities mix topics through the
/// document's own mixture (and, for the linked model, through the influence
/// mixtures of its influence set). Computation is in log space.
pub fn heldout_likelihood_range(
    model: &TopicModel,
    heldout: &Corpus,
    model_kind: ModelKind,
    docs: Range<usize>,
) -> Result<HeldoutScore> {
    let k = model.phi.rows();
    let vocab = model.phi.cols();
    if model.theta.rows() != heldout.doc_count() {
        return Err(Error::Validation(format!(
            "model covers {} documents, corpus has {}",
            model.theta.rows(),
            heldout.doc_count()
        )));
    }
    if model.theta.cols() != k {
        return Err(Error::Validation(
            "model theta and phi disagree on the number of topics".into(),
        ));
    }
    let chi = match model_kind {
        ModelKind::Lda => None,
        ModelKind::Linked => Some(model.chi.as_ref().ok_or_else(|| {
            Error::Validation("the linked model needs influence mixtures to score".into())
        })?),
    };

    let mut log_sum = 0.0;
    let mut positions = 0u64;
    let mut breakdown = vec![0.0; heldout.doc_count()];
    let mut mix = vec![0.0; k];
    for d in docs {
        let doc = heldout.document(d);
        if doc.groups().is_empty() {
            continue;
        }
        // Blend the topic mixture once per document; summing over influence
        // members commutes with summing over topics.
        match chi {
            None => mix.copy_from_slice(model.theta.row(d)),
            Some(chi) => {
                let members = influence_members(heldout, d);
                let chi_d = &chi[d];
                if chi_d.len() != members.len() {
                    return Err(Error::Validation(format!(
                        "document {d}: influence mixture has {} entries, influence set has {}",
                        chi_d.len(),
                        members.len()
                    )));
                }
                mix.iter_mut().for_each(|x| *x = 0.0);
                for (&r, &c) in members.iter().zip(chi_d) {
                    for (slot, &t) in mix.iter_mut().zip(model.theta.row(r)) {
                        *slot += c * t;
                    }
                }
            }
        }
        let mut doc_log = 0.0;
        for group in doc.groups() {
            if group.term >= vocab {
                return Err(Error::Validation(format!(
                    "document {d}: term {} is outside the model vocabulary of {vocab} terms",
                    group.term
                )));
            }
            let mut p = 0.0;
            for (z, &m) in mix.iter().enumerate() {
                p += model.phi.get(z, group.term) * m;
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Consistency(format!(
                    "token probability {p} for term {} in document {d}",
                    group.term
                )));
            }
            doc_log += f64::from(group.freq) * p.ln();
            positions += u64::from(group.freq);
        }
        breakdown[d] = doc_log;
        log_sum += doc_log;
    }
    if positions == 0 {
        return Err(Error::Validation(
            "held-out selection contains no token positions".into(),
        ));
    }
    Ok(HeldoutScore {
        score: (-(log_sum / positions as f64)).exp(),
        position_count: positions,
        doc_log_likelihood: breakdown,
    })
}

/// Outcome of unseen inference over a merged corpus whose first documents
/// are the (frozen) training documents and whose tail is the test set.
#[derive(Debug, Clone)]
pub struct UnseenResult {
    /// Estimates over the whole merged corpus.
    pub model: TopicModel,
    pub assignments: AssignmentState,
    pub counts: CountState,
    /// Index of the first test document in the merged corpus.
    pub test_start: usize,
}

impl UnseenResult {
    /// Model slice aligned with the test corpus: full term distributions,
    /// with mixture rows restricted to the test documents.
    pub fn test_model(&self) -> TopicModel {
        let k = self.model.theta.cols();
        let test_docs = self.model.theta.rows() - self.test_start;
        let mut theta = DenseMatrix::zeros(test_docs, k);
        for d in 0..test_docs {
            theta
                .row_mut(d)
                .copy_from_slice(self.model.theta.row(self.test_start + d));
        }
        TopicModel {
            phi: self.model.phi.clone(),
            theta,
            chi: self
                .model
                .chi
                .as_ref()
                .map(|chi| chi[self.test_start..].to_vec()),
        }
    }
}

/// Samples assignments for the test tail of `merged` while holding every
/// training assignment fixed; training counts still shape the conditionals.
/// `train_assignments` covers the first documents of `merged`; the remaining
/// documents get fresh seeded initialization and `iterations` sweeps with
/// the configured strategy.
pub fn unseen_inference(
    train_assignments: &AssignmentState,
    merged: &Corpus,
    config: &SamplerConfig,
    hyper: &Hyperparams,
    iterations: usize,
) -> Result<UnseenResult> {
    let train_docs = train_assignments.doc_count();
    if train_docs > merged.doc_count() {
        return Err(Error::Validation(format!(
            "training state covers {} documents, merged corpus has only {}",
            train_docs,
            merged.doc_count()
        )));
    }
    let mut assignments = train_assignments.clone();
    let mut rng = derived_rng(config.seed, 0);
    for d in train_docs..merged.doc_count() {
        assignments.push_doc(init_document(
            merged,
            d,
            config.model_kind,
            config.strategy,
            hyper.topic_count(),
            &mut rng,
        ));
    }
    let mut chain = GibbsChain::with_assignments(
        merged,
        config.clone(),
        hyper.clone(),
        None,
        assignments,
        0,
    )?;
    for _ in 0..iterations {
        chain.step_over(train_docs..merged.doc_count())?;
    }
    let model = chain.estimate();
    let (assignments, counts) = chain.into_state();
    Ok(UnseenResult {
        model,
        assignments,
        counts,
        test_start: train_docs,
    })
}

/// Writes per-document topic mixtures as CSV with header
/// `doc_id,label,theta_0..theta_{k-1}`; unlabeled documents get an empty
/// label field.
pub fn write_theta_csv<W: Write>(mut out: W, corpus: &Corpus, theta: &DenseMatrix) -> Result<()> {
    if theta.rows() != corpus.doc_count() {
        return Err(Error::Validation(format!(
            "theta covers {} documents, corpus has {}",
            theta.rows(),
            corpus.doc_count()
        )));
    }
    write!(out, "doc_id,label")?;
    for z in 0..theta.cols() {
        write!(out, ",theta_{z}")?;
    }
    writeln!(out)?;
    for d in 0..theta.rows() {
        write!(out, "{d},{}", corpus.label(d).unwrap_or(""))?;
        for &x in theta.row(d) {
            write!(out, ",{x:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes influence mixtures as `src,dst,weight` triples; the self-weight
/// row (src = dst) comes first for each document.
pub fn write_chi_csv<W: Write>(mut out: W, corpus: &Corpus, chi: &[Vec<f64>]) -> Result<()> {
    if chi.len() != corpus.doc_count() {
        return Err(Error::Validation(format!(
            "chi covers {} documents, corpus has {}",
            chi.len(),
            corpus.doc_count()
        )));
    }
    writeln!(out, "src,dst,weight")?;
    for (d, chi_d) in chi.iter().enumerate() {
        let members = influence_members(corpus, d);
        if members.len() != chi_d.len() {
            return Err(Error::Validation(format!(
                "document {d}: influence mixture has {} entries, influence set has {}",
                chi_d.len(),
                members.len()
            )));
        }
        for (r, w) in members.iter().zip(chi_d) {
            writeln!(out, "{d},{r},{w}")?;
        }
    }
    Ok(())
}
