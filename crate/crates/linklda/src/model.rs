//! Model configuration and sampler state: hyperparameters, influence sets
//! with their smoothing vectors, token-assignment storage, and the count
//! tables every sampling strategy reads and writes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::mat::DenseMatrix;

/// Which generative model the sampler targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Plain LDA: one topic per token.
    Lda,
    /// Link-aware LDA: one (influencing document, topic) pair per token, the
    /// influencer drawn from the document itself plus its out-neighbors.
    Linked,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Linked => "linked",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(ModelKind::Lda),
            "linked" => Ok(ModelKind::Linked),
            other => Err(Error::Validation(format!("unknown model kind {other:?}"))),
        }
    }
}

/// How the Gibbs sweep visits and updates token assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Baseline: resample every token position individually.
    Plain,
    /// One conditional per (document, term) group, reused for all of the
    /// group's tokens; counts still move by whole tokens.
    Aggregated,
    /// Deterministic: each group stores a fractional assignment vector that is
    /// replaced by the group conditional itself.
    Limit,
    /// Lazy `Limit`: per sweep only about `length / ell` groups per document
    /// are updated, chosen at random proportionally to term frequency.
    Sparse,
    /// Lazy `Aggregated` with the same group-selection rule as `Sparse`.
    AggregatedSparse,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Plain => "plain",
            Strategy::Aggregated => "aggregated",
            Strategy::Limit => "limit",
            Strategy::Sparse => "sparse",
            Strategy::AggregatedSparse => "agg-sparse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Strategy::Plain),
            "aggregated" => Ok(Strategy::Aggregated),
            "limit" => Ok(Strategy::Limit),
            "sparse" => Ok(Strategy::Sparse),
            "agg-sparse" => Ok(Strategy::AggregatedSparse),
            other => Err(Error::Validation(format!("unknown strategy {other:?}"))),
        }
    }

    /// Strategies that maintain fractional per-group mass vectors.
    pub fn fractional(self) -> bool {
        matches!(self, Strategy::Limit | Strategy::Sparse)
    }

    /// Strategies that update a random subset of groups per sweep and
    /// therefore require a sparsity level `ell`.
    pub fn lazy(self) -> bool {
        matches!(self, Strategy::Sparse | Strategy::AggregatedSparse)
    }
}

/// Groups whose frequency reaches this threshold are stored as per-outcome
/// count vectors under the aggregated strategies instead of per-token draws.
pub const AGGREGATED_COUNT_THRESHOLD: u32 = 4;

/// Default scale divisor for influence smoothing: `gamma_d` sums to
/// `length(d) / GAMMA_SCALE_DEFAULT`.
pub const GAMMA_SCALE_DEFAULT: f64 = 10.0;

/// Dirichlet hyperparameters. `alpha` smooths document-topic distributions
/// (length = topic count), `beta` smooths topic-term distributions (length =
/// vocabulary size), and `gamma_scale` controls the total influence smoothing
/// mass per document.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    topic_count: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma_scale: f64,
    alpha_sum: f64,
    beta_sum: f64,
}

impl Hyperparams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, gamma_scale: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Validation("alpha must have at least one entry".into()));
        }
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Validation("alpha entries must be positive and finite".into()));
        }
        if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Validation("beta entries must be positive and finite".into()));
        }
        if !(gamma_scale > 0.0 && gamma_scale.is_finite()) {
            return Err(Error::Validation("gamma scale must be positive and finite".into()));
        }
        let alpha_sum = alpha.iter().sum();
        let beta_sum = beta.iter().sum();
        Ok(Hyperparams {
            topic_count: alpha.len(),
            alpha,
            beta,
            gamma_scale,
            alpha_sum,
            beta_sum,
        })
    }

    /// Symmetric `alpha` and `beta` with explicit values.
    pub fn symmetric(
        topic_count: usize,
        vocab_size: usize,
        alpha: f64,
        beta: f64,
        gamma_scale: f64,
    ) -> Result<Self> {
        if topic_count == 0 {
            return Err(Error::Validation("topic count must be at least 1".into()));
        }
        Hyperparams::new(vec![alpha; topic_count], vec![beta; vocab_size], gamma_scale)
    }

    /// Standard defaults: `alpha = 50 / k`, `beta = 200 / |V|`, scale 10.
    pub fn defaults(topic_count: usize, vocab_size: usize) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Validation(
                "default hyperparameters require a non-empty vocabulary".into(),
            ));
        }
        if topic_count == 0 {
            return Err(Error::Validation("topic count must be at least 1".into()));
        }
        Hyperparams::symmetric(
            topic_count,
            vocab_size,
            50.0 / topic_count as f64,
            200.0 / vocab_size as f64,
            GAMMA_SCALE_DEFAULT,
        )
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha_sum
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta_sum
    }

    pub fn gamma_scale(&self) -> f64 {
        self.gamma_scale
    }
}

/// Influence-set members of `doc`: the document itself first, then its
/// out-neighbors in adjacency order.
pub fn influence_members(corpus: &Corpus, doc: usize) -> Vec<usize> {
    let outs = corpus.links().outlinks(doc);
    let mut members = Vec::with_capacity(1 + outs.len());
    members.push(doc);
    members.extend(outs.iter().map(|&(dst, _)| dst));
    members
}

/// Influence smoothing vector for `doc`, aligned with
/// [`influence_members`]: the self entry is proportional to one plus the
/// document's total outlink weight, each neighbor entry to its link weight,
/// and the whole vector is scaled so it sums to `length(doc) / scale`.
pub fn compute_gamma(corpus: &Corpus, doc: usize, scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Validation("gamma scale must be positive and finite".into()));
    }
    let length = corpus.document(doc).length();
    if length == 0 {
        return Err(Error::Validation(format!(
            "document {doc} is empty; influence smoothing is undefined"
        )));
    }
    let outs = corpus.links().outlinks(doc);
    let weight_total: f64 = outs.iter().map(|&(_, w)| w).sum();
    let mut gamma = Vec::with_capacity(1 + outs.len());
    gamma.push(1.0 + weight_total);
    gamma.extend(outs.iter().map(|&(_, w)| w));
    let raw_sum: f64 = gamma.iter().sum();
    let factor = (length as f64 / scale) / raw_sum;
    for g in &mut gamma {
        *g *= factor;
    }
    Ok(gamma)
}

/// Per-document influence sets with their smoothing vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceSets {
    members: Vec<Vec<usize>>,
    gammas: Vec<Vec<f64>>,
    gamma_sums: Vec<f64>,
}

impl InfluenceSets {
    /// Builds influence sets with the standard smoothing construction.
    pub fn build(corpus: &Corpus, scale: f64) -> Result<Self> {
        let mut members = Vec::with_capacity(corpus.doc_count());
        let mut gammas = Vec::with_capacity(corpus.doc_count());
        for d in 0..corpus.doc_count() {
            members.push(influence_members(corpus, d));
            gammas.push(compute_gamma(corpus, d, scale)?);
        }
        InfluenceSets::from_parts(members, gammas)
    }

    /// Builds influence sets with caller-supplied smoothing vectors, one per
    /// document, aligned with [`influence_members`].
    pub fn with_gammas(corpus: &Corpus, gammas: Vec<Vec<f64>>) -> Result<Self> {
        if gammas.len() != corpus.doc_count() {
            return Err(Error::Validation(format!(
                "expected {} smoothing vectors, found {}",
                corpus.doc_count(),
                gammas.len()
            )));
        }
        let members: Vec<Vec<usize>> = (0..corpus.doc_count())
            .map(|d| influence_members(corpus, d))
            .collect();
        InfluenceSets::from_parts(members, gammas)
    }

    fn from_parts(members: Vec<Vec<usize>>, gammas: Vec<Vec<f64>>) -> Result<Self> {
        let mut gamma_sums = Vec::with_capacity(gammas.len());
        for (d, (m, g)) in members.iter().zip(&gammas).enumerate() {
            if m.len() != g.len() {
                return Err(Error::Validation(format!(
                    "document {d}: influence set has {} members but {} smoothing entries",
                    m.len(),
                    g.len()
                )));
            }
            if g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Validation(format!(
                    "document {d}: smoothing entries must be positive and finite"
                )));
            }
            gamma_sums.push(g.iter().sum());
        }
        Ok(InfluenceSets {
            members,
            gammas,
            gamma_sums,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.members.len()
    }

    /// Influence-set members of `doc`; entry 0 is always `doc` itself.
    pub fn members(&self, doc: usize) -> &[usize] {
        &self.members[doc]
    }

    pub fn gamma(&self, doc: usize) -> &[f64] {
        &self.gammas[doc]
    }

    pub fn gamma_sum(&self, doc: usize) -> f64 {
        self.gamma_sums[doc]
    }

    pub fn set_size(&self, doc: usize) -> usize {
        self.members[doc].len()
    }
}

/// Assignment storage for one (document, term) group.
///
/// An *outcome* is a topic id for plain LDA, or `influencer_index * k + topic`
/// for the linked model, where `influencer_index` indexes the document's
/// influence set.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupAssignment {
    /// One outcome per token occurrence.
    Drawn(Vec<u32>),
    /// Integer-valued tally of outcomes over the whole group; used by the
    /// aggregated strategies for high-frequency groups.
    Counts(Vec<f64>),
    /// Fractional mass per outcome summing to the group frequency; used by
    /// the limit and sparse strategies.
    Mass(Vec<f64>),
}

impl GroupAssignment {
    /// Total token mass stored in this group.
    pub fn total(&self) -> f64 {
        match self {
            GroupAssignment::Drawn(v) => v.len() as f64,
            GroupAssignment::Counts(c) | GroupAssignment::Mass(c) => c.iter().sum(),
        }
    }
}

/// Token assignments for a whole corpus, parallel to its document/group
/// structure.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentState {
    model_kind: ModelKind,
    docs: Vec<Vec<GroupAssignment>>,
}

impl AssignmentState {
    pub fn new(model_kind: ModelKind, docs: Vec<Vec<GroupAssignment>>) -> Self {
        AssignmentState { model_kind, docs }
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model_kind
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn doc(&self, d: usize) -> &[GroupAssignment] {
        &self.docs[d]
    }

    pub fn doc_mut(&mut self, d: usize) -> &mut [GroupAssignment] {
        &mut self.docs[d]
    }

    pub fn docs(&self) -> &[Vec<GroupAssignment>] {
        &self.docs
    }

    pub fn push_doc(&mut self, groups: Vec<GroupAssignment>) {
        self.docs.push(groups);
    }

    pub fn truncate(&mut self, doc_count: usize) {
        self.docs.truncate(doc_count);
    }
}

/// Number of distinct assignment outcomes for document `d`.
pub(crate) fn outcome_count(
    model_kind: ModelKind,
    infl: Option<&InfluenceSets>,
    doc: usize,
    topic_count: usize,
) -> usize {
    match model_kind {
        ModelKind::Lda => topic_count,
        ModelKind::Linked => {
            let sets = infl.expect("linked model requires influence sets");
            sets.set_size(doc) * topic_count
        }
    }
}

/// Draws initial assignments for a single document. Plain and aggregated
/// strategies draw one uniform outcome per token (topic first, then
/// influencer); fractional strategies place the whole group mass on a single
/// uniform outcome.
pub(crate) fn init_document(
    corpus: &Corpus,
    doc: usize,
    model_kind: ModelKind,
    strategy: Strategy,
    topic_count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<GroupAssignment> {
    let set_size = match model_kind {
        ModelKind::Lda => 1,
        ModelKind::Linked => 1 + corpus.links().outlinks(doc).len(),
    };
    let outcomes = set_size * topic_count;
    let mut groups = Vec::with_capacity(corpus.document(doc).distinct_terms());
    for group in corpus.document(doc).groups() {
        let draw = |rng: &mut ChaCha8Rng| -> u32 {
            let z = rng.random_range(0..topic_count);
            let r = if set_size > 1 { rng.random_range(0..set_size) } else { 0 };
            (r * topic_count + z) as u32
        };
        let ga = match strategy {
            Strategy::Plain => {
                GroupAssignment::Drawn((0..group.freq).map(|_| draw(rng)).collect())
            }
            Strategy::Aggregated | Strategy::AggregatedSparse => {
                if group.freq >= AGGREGATED_COUNT_THRESHOLD {
                    let mut counts = vec![0.0; outcomes];
                    for _ in 0..group.freq {
                        counts[draw(rng) as usize] += 1.0;
                    }
                    GroupAssignment::Counts(counts)
                } else {
                    GroupAssignment::Drawn((0..group.freq).map(|_| draw(rng)).collect())
                }
            }
            Strategy::Limit | Strategy::Sparse => {
                let mut mass = vec![0.0; outcomes];
                mass[draw(rng) as usize] = f64::from(group.freq);
                GroupAssignment::Mass(mass)
            }
        };
        groups.push(ga);
    }
    groups
}

/// Random initial assignments for every document. The generator is the
/// sampler's stream-0 generator for `seed`, so initialization is reproducible
/// and disjoint from the per-iteration streams.
pub fn init_assignments(
    corpus: &Corpus,
    model_kind: ModelKind,
    strategy: Strategy,
    topic_count: usize,
    seed: u64,
) -> AssignmentState {
    let mut rng = derived_rng(seed, 0);
    let docs = (0..corpus.doc_count())
        .map(|d| init_document(corpus, d, model_kind, strategy, topic_count, &mut rng))
        .collect();
    AssignmentState::new(model_kind, docs)
}

/// ChaCha generator for a (seed, stream) pair. Stream 0 is reserved for
/// initialization; iteration `t` uses stream `t + 1`.
pub fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// All count tables the conditionals read. Counts are `f64` throughout so the
/// integer strategies and the fractional ones share one representation;
/// integer strategies keep them exactly integral.
///
/// `doc_topic[r][z]` counts tokens credited to influencing document `r` with
/// topic `z` (for plain LDA the influencer is always the owning document);
/// `influenced_total[r]` is its row sum. `term_topic[w][z]` counts tokens of
/// term `w` in topic `z` — term-major so the per-term conditional reads one
/// contiguous row — and `topic_total[z]` is the per-topic column sum.
/// `doc_influencer[d][i]` counts tokens of `d` credited to influence-set
/// member `i` (linked model only; empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct CountState {
    pub(crate) doc_topic: DenseMatrix,
    pub(crate) term_topic: DenseMatrix,
    pub(crate) topic_total: Vec<f64>,
    pub(crate) influenced_total: Vec<f64>,
    pub(crate) doc_influencer: Vec<Vec<f64>>,
}

impl CountState {
    pub fn doc_topic(&self) -> &DenseMatrix {
        &self.doc_topic
    }

    pub fn term_topic(&self) -> &DenseMatrix {
        &self.term_topic
    }

    pub fn topic_total(&self) -> &[f64] {
        &self.topic_total
    }

    pub fn influenced_total(&self) -> &[f64] {
        &self.influenced_total
    }

    pub fn doc_influencer(&self) -> &[Vec<f64>] {
        &self.doc_influencer
    }

    pub fn topic_count(&self) -> usize {
        self.doc_topic.cols()
    }

    /// Largest absolute difference across all tables; shapes must match.
    pub fn max_abs_diff(&self, other: &CountState) -> f64 {
        let mut worst = self.doc_topic.max_abs_diff(&other.doc_topic);
        worst = worst.max(self.term_topic.max_abs_diff(&other.term_topic));
        for (a, b) in self.topic_total.iter().zip(&other.topic_total) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in self.influenced_total.iter().zip(&other.influenced_total) {
            worst = worst.max((a - b).abs());
        }
        for (ra, rb) in self.doc_influencer.iter().zip(&other.doc_influencer) {
            for (a, b) in ra.iter().zip(rb) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// Rebuilds every count table from scratch by replaying the assignments.
/// This is the ground truth the incremental updates are periodically
/// reconciled against.
pub fn counts_from_assignments(
    corpus: &Corpus,
    assignments: &AssignmentState,
    infl: Option<&InfluenceSets>,
    topic_count: usize,
) -> Result<CountState> {
    let model_kind = assignments.model_kind();
    if assignments.doc_count() != corpus.doc_count() {
        return Err(Error::Validation(format!(
            "assignments cover {} documents but the corpus has {}",
            assignments.doc_count(),
            corpus.doc_count()
        )));
    }
    if model_kind == ModelKind::Linked && infl.is_none() {
        return Err(Error::Validation(
            "linked-model counts require influence sets".into(),
        ));
    }
    let doc_count = corpus.doc_count();
    let vocab_size = corpus.vocab_size();
    let mut counts = CountState {
        doc_topic: DenseMatrix::zeros(doc_count, topic_count),
        term_topic: DenseMatrix::zeros(vocab_size, topic_count),
        topic_total: vec![0.0; topic_count],
        influenced_total: vec![0.0; doc_count],
        doc_influencer: match model_kind {
            ModelKind::Lda => Vec::new(),
            ModelKind::Linked => {
                let sets = infl.unwrap();
                (0..doc_count).map(|d| vec![0.0; sets.set_size(d)]).collect()
            }
        },
    };

    for d in 0..doc_count {
        let doc = corpus.document(d);
        let groups = assignments.doc(d);
        if groups.len() != doc.distinct_terms() {
            return Err(Error::Validation(format!(
                "document {d}: expected {} assignment groups, found {}",
                doc.distinct_terms(),
                groups.len()
            )));
        }
        let outcomes = outcome_count(model_kind, infl, d, topic_count);
        for (group, ga) in doc.groups().iter().zip(groups) {
            let mut credit = |outcome: usize, mass: f64| -> Result<()> {
                if outcome >= outcomes {
                    return Err(Error::Validation(format!(
                        "document {d}: outcome {outcome} out of range ({outcomes} possible)"
                    )));
                }
                let z = outcome % topic_count;
                let r = match model_kind {
                    ModelKind::Lda => d,
                    ModelKind::Linked => {
                        let idx = outcome / topic_count;
                        counts.doc_influencer[d][idx] += mass;
                        infl.unwrap().members(d)[idx]
                    }
                };
                counts.doc_topic.add(r, z, mass);
                counts.influenced_total[r] += mass;
                counts.term_topic.add(group.term, z, mass);
                counts.topic_total[z] += mass;
                Ok(())
            };
            match ga {
                GroupAssignment::Drawn(v) => {
                    if v.len() != group.freq as usize {
                        return Err(Error::Validation(format!(
                            "document {d}: group for term {} stores {} draws for frequency {}",
                            group.term,
                            v.len(),
                            group.freq
                        )));
                    }
                    for &o in v {
                        credit(o as usize, 1.0)?;
                    }
                }
                GroupAssignment::Counts(c) | GroupAssignment::Mass(c) => {
                    if c.len() != outcomes {
                        return Err(Error::Validation(format!(
                            "document {d}: group for term {} has {} outcome slots, expected {outcomes}",
                            group.term,
                            c.len()
                        )));
                    }
                    let total: f64 = c.iter().sum();
                    if (total - f64::from(group.freq)).abs() > 1e-6 * f64::from(group.freq).max(1.0)
                    {
                        return Err(Error::Validation(format!(
                            "document {d}: group mass {total} does not match frequency {}",
                            group.freq
                        )));
                    }
                    if c.iter().any(|&x| x < 0.0) {
                        return Err(Error::Validation(format!(
                            "document {d}: negative assignment mass"
                        )));
                    }
                    for (o, &mass) in c.iter().enumerate() {
                        if mass != 0.0 {
                            credit(o, mass)?;
                        }
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Point estimates extracted from a sampler state: `phi` is topics-by-terms,
/// `theta` documents-by-topics, and `chi` (linked model only) one influence
/// distribution per document over its influence set.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub phi: DenseMatrix,
    pub theta: DenseMatrix,
    pub chi: Option<Vec<Vec<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, LinkGraph, Vocabulary};
    use approx::assert_abs_diff_eq;

    fn corpus_with_links(
        doc_lengths: &[u32],
        edges: &[(usize, usize, f64)],
    ) -> Corpus {
        let vocab = Vocabulary::new(vec!["t".into()]).unwrap();
        let documents = doc_lengths
            .iter()
            .map(|&len| Document::from_pairs([(0, len)]).unwrap())
            .collect();
        let links = LinkGraph::from_edges(doc_lengths.len(), edges.iter().copied()).unwrap();
        Corpus::unlabeled(vocab, documents, links).unwrap()
    }

    #[test]
    fn gamma_weights_follow_outlink_weights() {
        // Outlinks with weights 3 and 1, length 100, scale 10: the raw vector
        // (1 + 4, 3, 1) is scaled to sum to 10.
        let corpus = corpus_with_links(&[100, 1, 1], &[(0, 1, 3.0), (0, 2, 1.0)]);
        let gamma = compute_gamma(&corpus, 0, 10.0).unwrap();
        assert_eq!(gamma.len(), 3);
        assert_abs_diff_eq!(gamma[0], 50.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma[1], 30.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma[2], 10.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma.iter().sum::<f64>(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_with_unit_weights() {
        let corpus = corpus_with_links(&[100, 1, 1], &[(0, 1, 1.0), (0, 2, 1.0)]);
        let gamma = compute_gamma(&corpus, 0, 10.0).unwrap();
        assert_abs_diff_eq!(gamma[0], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma[2], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_without_outlinks_is_self_only() {
        let corpus = corpus_with_links(&[50], &[]);
        let gamma = compute_gamma(&corpus, 0, 10.0).unwrap();
        assert_eq!(gamma.len(), 1);
        assert_abs_diff_eq!(gamma[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn influence_members_start_with_self() {
        let corpus = corpus_with_links(&[10, 10, 10], &[(1, 0, 1.0), (1, 2, 2.0)]);
        assert_eq!(influence_members(&corpus, 1), vec![1, 0, 2]);
        assert_eq!(influence_members(&corpus, 0), vec![0]);
        let sets = InfluenceSets::build(&corpus, 10.0).unwrap();
        assert_eq!(sets.members(1), &[1, 0, 2]);
        assert_eq!(sets.set_size(0), 1);
        assert_abs_diff_eq!(sets.gamma_sum(1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn defaults_follow_standard_heuristics() {
        let hp = Hyperparams::defaults(30, 1000).unwrap();
        assert_abs_diff_eq!(hp.alpha()[0], 50.0 / 30.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hp.beta()[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(hp.alpha_sum(), 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hp.beta_sum(), 200.0, epsilon = 1e-9);
        assert_eq!(hp.gamma_scale(), 10.0);
    }

    #[test]
    fn hyperparams_reject_nonpositive_entries() {
        assert!(Hyperparams::new(vec![0.0], vec![0.1], 10.0).is_err());
        assert!(Hyperparams::new(vec![0.5], vec![-0.1], 10.0).is_err());
        assert!(Hyperparams::new(vec![0.5], vec![0.1], 0.0).is_err());
        assert!(Hyperparams::defaults(5, 0).is_err());
    }

    #[test]
    fn init_covers_every_token_and_is_seeded() {
        let corpus = corpus_with_links(&[7, 3], &[(0, 1, 1.0)]);
        for strategy in [
            Strategy::Plain,
            Strategy::Aggregated,
            Strategy::Limit,
            Strategy::Sparse,
            Strategy::AggregatedSparse,
        ] {
            let a = init_assignments(&corpus, ModelKind::Linked, strategy, 4, 11);
            let b = init_assignments(&corpus, ModelKind::Linked, strategy, 4, 11);
            assert_eq!(a, b, "same seed must reproduce init for {strategy:?}");
            let c = init_assignments(&corpus, ModelKind::Linked, strategy, 4, 12);
            assert_ne!(a, c, "different seeds should differ for {strategy:?}");
            for (d, doc) in corpus.documents().iter().enumerate() {
                for (group, ga) in doc.groups().iter().zip(a.doc(d)) {
                    assert_abs_diff_eq!(ga.total(), f64::from(group.freq), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn aggregated_init_uses_counts_above_threshold() {
        let corpus = corpus_with_links(&[7, 3], &[]);
        let a = init_assignments(&corpus, ModelKind::Lda, Strategy::Aggregated, 2, 5);
        assert!(matches!(a.doc(0)[0], GroupAssignment::Counts(_)));
        assert!(matches!(a.doc(1)[0], GroupAssignment::Drawn(_)));
    }

    #[test]
    fn counts_from_assignments_tallies_all_tables() {
        let corpus = corpus_with_links(&[4, 2], &[(0, 1, 1.0)]);
        let sets = InfluenceSets::build(&corpus, 10.0).unwrap();
        let k = 2;
        // Doc 0 (4 tokens of term 0): two on (self, z=0), one (self, z=1),
        // one (neighbor 1, z=1). Doc 1 (2 tokens): both (self, z=0).
        let a = AssignmentState::new(
            ModelKind::Linked,
            vec![
                vec![GroupAssignment::Drawn(vec![0, 0, 1, 3])],
                vec![GroupAssignment::Drawn(vec![0, 0])],
            ],
        );
        let counts = counts_from_assignments(&corpus, &a, Some(&sets), k).unwrap();
        assert_eq!(counts.doc_topic.row(0), &[2.0, 1.0]);
        assert_eq!(counts.doc_topic.row(1), &[2.0, 1.0]);
        assert_eq!(counts.influenced_total, vec![3.0, 3.0]);
        assert_eq!(counts.doc_influencer[0], vec![3.0, 1.0]);
        assert_eq!(counts.doc_influencer[1], vec![2.0]);
        assert_eq!(counts.term_topic.row(0), &[4.0, 2.0]);
        assert_eq!(counts.topic_total, vec![4.0, 2.0]);
    }

    #[test]
    fn counts_on_empty_corpus_are_zero() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let corpus = Corpus::unlabeled(vocab, Vec::new(), LinkGraph::empty(0)).unwrap();
        let a = AssignmentState::new(ModelKind::Lda, Vec::new());
        let counts = counts_from_assignments(&corpus, &a, None, 3).unwrap();
        assert_eq!(counts.topic_total, vec![0.0; 3]);
        assert_eq!(counts.term_topic.rows(), 2);
    }

    #[test]
    fn counts_reject_invalid_outcomes() {
        let corpus = corpus_with_links(&[1], &[]);
        let a = AssignmentState::new(
            ModelKind::Lda,
            vec![vec![GroupAssignment::Drawn(vec![5])]],
        );
        assert!(counts_from_assignments(&corpus, &a, None, 2).is_err());
    }

    #[test]
    fn counts_reject_mass_mismatch() {
        let corpus = corpus_with_links(&[3], &[]);
        let a = AssignmentState::new(
            ModelKind::Lda,
            vec![vec![GroupAssignment::Mass(vec![1.0, 1.0])]],
        );
        assert!(counts_from_assignments(&corpus, &a, None, 2).is_err());
    }
}
