//! Stacked graphical learning over topic features: edge-weight construction
//! (cocitation, influence mixtures, and their reversed variants),
//! neighbor-prediction feature expansion, a minimal built-in linear
//! classifier, and rank-based AUC evaluation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{partition_folds, Corpus, LinkGraph};
use crate::error::{Error, Result};
use crate::mat::DenseMatrix;

/// How an [`EdgeWeights`] table was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Number of common in-neighbors of the two endpoints.
    Cocitation,
    /// Cocitation on the reversed graph: number of common out-neighbors.
    ReversedCocitation,
    /// Inferred influence mixtures, self-mass dropped and renormalized.
    Chi,
    /// Influence weights with every edge direction flipped.
    ReversedChi,
}

impl WeightKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::Cocitation => "coc",
            WeightKind::ReversedCocitation => "rev-coc",
            WeightKind::Chi => "chi",
            WeightKind::ReversedChi => "rev-chi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coc" => Ok(WeightKind::Cocitation),
            "rev-coc" => Ok(WeightKind::ReversedCocitation),
            "chi" => Ok(WeightKind::Chi),
            "rev-chi" => Ok(WeightKind::ReversedChi),
            other => Err(Error::Validation(format!(
                "unknown weighting {other:?} (expected coc, rev-coc, chi, or rev-chi)"
            ))),
        }
    }
}

/// Sparse nonnegative edge weights between documents; zero entries are
/// omitted. Cocitation variants are symmetric, influence variants directed.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    kind: WeightKind,
    /// Per node: weighted neighbors sorted by target id.
    adj: Vec<Vec<(usize, f64)>>,
}

impl EdgeWeights {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }

    /// Weight of the (u, v) entry, zero when absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        match self.adj[u].binary_search_by_key(&v, |e| e.0) {
            Ok(i) => self.adj[u][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// Symmetric integer weights counting the common in-neighbors of each pair,
/// computed by accumulating over each source's out-neighbor pairs.
pub fn cocitation_weights(graph: &LinkGraph) -> EdgeWeights {
    let n = graph.doc_count();
    let mut pairs: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for s in 0..n {
        let outs = graph.outlinks(s);
        for i in 0..outs.len() {
            for j in (i + 1)..outs.len() {
                *pairs.entry((outs[i].0, outs[j].0)).or_insert(0) += 1;
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for (&(u, v), &c) in &pairs {
        adj[u].push((v, c as f64));
        adj[v].push((u, c as f64));
    }
    for row in &mut adj {
        row.sort_by_key(|e| e.0);
    }
    EdgeWeights {
        kind: WeightKind::Cocitation,
        adj,
    }
}

/// Common out-neighbors of each pair (cocitation of the reversed graph).
pub fn reversed_cocitation_weights(graph: &LinkGraph) -> EdgeWeights {
    EdgeWeights {
        kind: WeightKind::ReversedCocitation,
        ..cocitation_weights(&graph.reversed())
    }
}

/// Directed weights taken from inferred influence mixtures: each document's
/// self-mass is dropped and the remaining mass renormalized over its
/// outlink targets, so per-source weights sum to 1 (or 0 without outlinks).
pub fn chi_edge_weights(chi: &[Vec<f64>], graph: &LinkGraph) -> Result<EdgeWeights> {
    let n = graph.doc_count();
    if chi.len() != n {
        return Err(Error::Validation(format!(
            "influence mixtures cover {} documents, graph has {n}",
            chi.len()
        )));
    }
    let mut adj = vec![Vec::new(); n];
    for (d, chi_d) in chi.iter().enumerate() {
        let outs = graph.outlinks(d);
        if chi_d.len() != outs.len() + 1 {
            return Err(Error::Validation(format!(
                "document {d}: influence mixture has {} entries, expected {}",
                chi_d.len(),
                outs.len() + 1
            )));
        }
        let total: f64 = chi_d[1..].iter().sum();
        if total > 0.0 {
            adj[d] = outs
                .iter()
                .zip(&chi_d[1..])
                .map(|(&(t, _), &w)| (t, w / total))
                .collect();
        }
    }
    Ok(EdgeWeights {
        kind: WeightKind::Chi,
        adj,
    })
}

/// [`chi_edge_weights`] with every edge direction flipped.
pub fn reversed_chi_edge_weights(chi: &[Vec<f64>], graph: &LinkGraph) -> Result<EdgeWeights> {
    let forward = chi_edge_weights(chi, graph)?;
    let mut adj = vec![Vec::new(); forward.node_count()];
    for (u, row) in forward.adj.iter().enumerate() {
        for &(v, w) in row {
            adj[v].push((u, w));
        }
    }
    for row in &mut adj {
        row.sort_by_key(|e| e.0);
    }
    Ok(EdgeWeights {
        kind: WeightKind::ReversedChi,
        adj,
    })
}

/// Builds the edge weights of the requested kind; influence-based kinds
/// need the model's influence mixtures.
pub fn build_edge_weights(
    kind: WeightKind,
    graph: &LinkGraph,
    chi: Option<&[Vec<f64>]>,
) -> Result<EdgeWeights> {
    match kind {
        WeightKind::Cocitation => Ok(cocitation_weights(graph)),
        WeightKind::ReversedCocitation => Ok(reversed_cocitation_weights(graph)),
        WeightKind::Chi | WeightKind::ReversedChi => {
            let chi = chi.ok_or_else(|| {
                Error::Validation(
                    "influence-based weighting needs a linked model's influence mixtures".into(),
                )
            })?;
            if kind == WeightKind::Chi {
                chi_edge_weights(chi, graph)
            } else {
                reversed_chi_edge_weights(chi, graph)
            }
        }
    }
}

/// Neighbor-aggregate feature: for each document, the weighted mean of its
/// neighbors' scores, where a training document contributes its known label
/// (1 or 0) and every other document its model prediction. Documents with
/// no weighted neighbors get 0.5. `train_labels` must be `None` for every
/// document outside the current training set.
pub fn stack_features(
    predictions: &[f64],
    weights: &EdgeWeights,
    train_labels: &[Option<bool>],
) -> Vec<f64> {
    assert_eq!(predictions.len(), weights.node_count());
    assert_eq!(train_labels.len(), weights.node_count());
    (0..predictions.len())
        .map(|u| {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(v, w) in weights.neighbors(u) {
                let p = match train_labels[v] {
                    Some(true) => 1.0,
                    Some(false) => 0.0,
                    None => predictions[v],
                };
                num += w * p;
                den += w;
            }
            if den > 0.0 {
                num / den
            } else {
                0.5
            }
        })
        .collect()
}

pub const CLASSIFIER_EPOCHS: usize = 500;
pub const CLASSIFIER_STEP: f64 = 0.5;
pub const CLASSIFIER_L2: f64 = 1e-3;

#[inline]
fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Logistic model fit by full-batch gradient descent with a fixed step size
/// and an L2 penalty on the weights (not the intercept). Deterministic:
/// zero-initialized, fixed epoch count.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearClassifier {
    pub fn train(features: &[Vec<f64>], labels: &[bool]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Validation("classifier needs at least one example".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if features.iter().any(|x| x.len() != dim) {
            return Err(Error::Validation("feature rows differ in length".into()));
        }
        let mut weights = vec![0.0; dim];
        let mut bias = 0.0;
        let mut grad = vec![0.0; dim];
        let inv_n = 1.0 / features.len() as f64;
        for _ in 0..CLASSIFIER_EPOCHS {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_bias = 0.0;
            for (x, &y) in features.iter().zip(labels) {
                let margin =
                    bias + weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
                let err = sigmoid(margin) - f64::from(u8::from(y));
                for (g, &xi) in grad.iter_mut().zip(x) {
                    *g += err * xi;
                }
                grad_bias += err;
            }
            for (w, &g) in weights.iter_mut().zip(&grad) {
                *w -= CLASSIFIER_STEP * (g * inv_n + CLASSIFIER_L2 * *w);
            }
            bias -= CLASSIFIER_STEP * grad_bias * inv_n;
        }
        Ok(LinearClassifier { weights, bias })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let margin = self.bias
            + self
                .weights
                .iter()
                .zip(x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>();
        sigmoid(margin)
    }
}

/// Rank-based AUC with tied scores counting half. Needs at least one
/// positive and one negative label.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("AUC scores must not be NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Validation(
            "AUC needs at least one positive and one negative example".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Items i..j share ranks i+1..=j; each gets the block average.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &t in &order[i..j] {
            if labels[t] {
                positive_rank_sum += avg_rank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    Ok((positive_rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Cross-validated stacked-learning evaluation setup.
#[derive(Debug, Clone)]
pub struct StackingConfig {
    pub fold_count: usize,
    pub seed: u64,
    /// 0 = base classifier only; each layer appends one neighbor-aggregate
    /// feature computed from the previous layer's predictions and retrains.
    pub layers: usize,
}

impl StackingConfig {
    pub fn new(fold_count: usize, seed: u64, layers: usize) -> Self {
        StackingConfig { fold_count, seed, layers }
    }

    fn validate(&self) -> Result<()> {
        if self.fold_count < 2 {
            return Err(Error::Validation("stacking needs at least 2 folds".into()));
        }
        if self.layers > 2 {
            return Err(Error::Validation(format!(
                "stacking supports at most 2 layers, got {}",
                self.layers
            )));
        }
        Ok(())
    }
}

/// One evaluated (class, fold) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StackRow {
    pub class: String,
    pub fold: usize,
    pub layers: usize,
    pub weighting: WeightKind,
    pub auc: f64,
}

/// All evaluated cells plus the macro-average / spread summary.
#[derive(Debug, Clone)]
pub struct StackingOutcome {
    pub rows: Vec<StackRow>,
    /// (class, fold) pairs skipped because one side of the split lacked
    /// both label values.
    pub skipped: Vec<(String, usize)>,
    pub macro_average: f64,
    pub std_dev: f64,
}

/// One-vs-rest stacked-learning evaluation over every label class with
/// shared cross-validation folds. Per fold: train the base classifier on
/// the training documents' topic mixtures, then per stacking layer append
/// the neighbor aggregate of the previous layer's predictions (training
/// documents substituted by their labels) and retrain; the final
/// classifier's scores on the held-out fold give the AUC.
pub fn train_and_evaluate(
    corpus: &Corpus,
    theta: &DenseMatrix,
    weights: &EdgeWeights,
    config: &StackingConfig,
) -> Result<StackingOutcome> {
    config.validate()?;
    let m = corpus.doc_count();
    if theta.rows() != m {
        return Err(Error::Validation(format!(
            "theta covers {} documents, corpus has {m}",
            theta.rows()
        )));
    }
    if weights.node_count() != m {
        return Err(Error::Validation(format!(
            "edge weights cover {} documents, corpus has {m}",
            weights.node_count()
        )));
    }
    let labeled = corpus.labeled_docs();
    if labeled.is_empty() {
        return Err(Error::Validation("stacking needs labeled documents".into()));
    }
    let classes: BTreeSet<String> = labeled
        .iter()
        .filter_map(|&d| corpus.label(d).map(str::to_string))
        .collect();

    // One fold assignment shared by every class.
    let mut order = labeled.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);
    let bounds = partition_folds(order.len(), config.fold_count);

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for class in &classes {
        let truth: Vec<Option<bool>> = corpus
            .labels()
            .iter()
            .map(|l| l.as_deref().map(|s| s == class))
            .collect();
        for (fold, &(start, end)) in bounds.iter().enumerate() {
            let mut in_test = vec![false; m];
            for &d in &order[start..end] {
                in_test[d] = true;
            }
            let train_docs: Vec<usize> =
                labeled.iter().copied().filter(|&d| !in_test[d]).collect();
            let test_docs = &order[start..end];
            let has_both = |docs: &[usize]| {
                docs.iter().any(|&d| truth[d] == Some(true))
                    && docs.iter().any(|&d| truth[d] == Some(false))
            };
            if test_docs.is_empty() || !has_both(test_docs) || !has_both(&train_docs) {
                skipped.push((class.clone(), fold));
                continue;
            }

            // Label substitution source: training documents only.
            let train_labels: Vec<Option<bool>> = (0..m)
                .map(|d| if in_test[d] { None } else { truth[d] })
                .collect();

            let mut features: Vec<Vec<f64>> = (0..m).map(|d| theta.row(d).to_vec()).collect();
            let train_matrix = |features: &[Vec<f64>]| {
                train_docs
                    .iter()
                    .map(|&d| features[d].clone())
                    .collect::<Vec<_>>()
            };
            let train_y: Vec<bool> = train_docs
                .iter()
                .map(|&d| truth[d].expect("train docs are labeled"))
                .collect();

            let mut classifier = LinearClassifier::train(&train_matrix(&features), &train_y)?;
            let mut predictions: Vec<f64> =
                features.iter().map(|x| classifier.predict(x)).collect();
            for _ in 0..config.layers {
                let aggregate = stack_features(&predictions, weights, &train_labels);
                for (row, &a) in features.iter_mut().zip(&aggregate) {
                    row.push(a);
                }
                classifier = LinearClassifier::train(&train_matrix(&features), &train_y)?;
                predictions = features.iter().map(|x| classifier.predict(x)).collect();
            }

            let scores: Vec<f64> = test_docs.iter().map(|&d| predictions[d]).collect();
            let labels: Vec<bool> = test_docs
                .iter()
                .map(|&d| truth[d].expect("test docs are labeled"))
                .collect();
            rows.push(StackRow {
                class: class.clone(),
                fold,
                layers: config.layers,
                weighting: weights.kind(),
                auc: auc(&scores, &labels)?,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation(
            "every (class, fold) cell was degenerate; nothing to evaluate".into(),
        ));
    }
    let macro_average = rows.iter().map(|r| r.auc).sum::<f64>() / rows.len() as f64;
    let std_dev = if rows.len() > 1 {
        let var = rows
            .iter()
            .map(|r| (r.auc - macro_average).powi(2))
            .sum::<f64>()
            / (rows.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    Ok(StackingOutcome {
        rows,
        skipped,
        macro_average,
        std_dev,
    })
}
