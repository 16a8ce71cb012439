//! Collapsed Gibbs sweeps over token assignments, for both models and all
//! sampling strategies.
//!
//! A [`GibbsChain`] owns the mutable state of one chain: assignments, count
//! tables, and the iteration counter. Randomness is ChaCha with one stream
//! per iteration (stream 0 is initialization, iteration `t` uses stream
//! `t + 1`), so a resumed chain consumes exactly the same variates as an
//! uninterrupted one. Every multinomial draw consumes a single uniform variate
//! via inverse-CDF over the outcome weights.

use std::ops::Range;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::estimate;
use crate::model::{
    counts_from_assignments, derived_rng, init_assignments, outcome_count, AssignmentState,
    CountState, GroupAssignment, Hyperparams, InfluenceSets, ModelKind, Strategy, TopicModel,
};

/// Counts may drift this far negative before the sampler declares its state
/// corrupt. Floating-point cancellation in the fractional strategies stays
/// many orders of magnitude below this.
const NEGATIVE_COUNT_TOLERANCE: f64 = -1e-9;

/// Full configuration of one sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub model_kind: ModelKind,
    pub strategy: Strategy,
    /// Sparsity level for the lazy strategies; roughly `length / ell` groups
    /// per document are updated per sweep. Must be `None` otherwise.
    pub sparsity_ell: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    /// Counts are rebuilt from the assignments every this many iterations to
    /// cancel floating-point drift from the fractional strategies.
    pub recount_every: usize,
}

impl SamplerConfig {
    pub fn new(model_kind: ModelKind, strategy: Strategy) -> Self {
        SamplerConfig {
            model_kind,
            strategy,
            sparsity_ell: None,
            iterations: 50,
            seed: 0,
            recount_every: 25,
        }
    }

    pub fn with_ell(mut self, ell: f64) -> Self {
        self.sparsity_ell = Some(ell);
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_recount_every(mut self, recount_every: usize) -> Self {
        self.recount_every = recount_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.recount_every == 0 {
            return Err(Error::Validation("recount interval must be at least 1".into()));
        }
        match (self.strategy.lazy(), self.sparsity_ell) {
            (true, None) => Err(Error::Validation(format!(
                "strategy {:?} requires a sparsity level",
                self.strategy.as_str()
            ))),
            (true, Some(ell)) if !(ell >= 1.0 && ell.is_finite()) => Err(Error::Validation(
                format!("sparsity level must be a finite value >= 1, got {ell}"),
            )),
            (false, Some(_)) => Err(Error::Validation(format!(
                "strategy {:?} does not take a sparsity level",
                self.strategy.as_str()
            ))),
            _ => Ok(()),
        }
    }
}

#[inline]
fn checked_count(x: f64, what: &str) -> Result<f64> {
    if x < NEGATIVE_COUNT_TOLERANCE {
        return Err(Error::Consistency(format!("{what} is negative ({x})")));
    }
    Ok(if x < 0.0 { 0.0 } else { x })
}

/// Unnormalized LDA conditional weights for one token of `term` in `doc`,
/// written into `out` (length k). `counts` must already exclude the token
/// being resampled. Returns the total weight.
pub(crate) fn lda_weights(
    counts: &CountState,
    hyper: &Hyperparams,
    doc: usize,
    term: usize,
    out: &mut [f64],
) -> Result<f64> {
    let k = hyper.topic_count();
    debug_assert_eq!(out.len(), k);
    let beta_w = hyper.beta()[term];
    let beta_sum = hyper.beta_sum();
    let alpha = hyper.alpha();
    let doc_total = checked_count(counts.influenced_total[doc], "document token total")?;
    let inv_doc = 1.0 / (doc_total + hyper.alpha_sum());
    let doc_row = counts.doc_topic.row(doc);
    let term_row = counts.term_topic.row(term);
    let mut total = 0.0;
    for z in 0..k {
        let n_zw = checked_count(term_row[z], "term-topic count")?;
        let n_z = checked_count(counts.topic_total[z], "topic total")?;
        let n_dz = checked_count(doc_row[z], "document-topic count")?;
        let w = (n_zw + beta_w) / (n_z + beta_sum) * (n_dz + alpha[z]) * inv_doc;
        out[z] = w;
        total += w;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Consistency(format!(
            "conditional mass {total} is not positive and finite"
        )));
    }
    Ok(total)
}

/// Unnormalized linked-model conditional over (influencer, topic) outcomes
/// for one token, written into `out` (length `|S_doc| * k`, influencer-major,
/// self first). The middle ratio's denominator is constant across outcomes
/// but kept so each factor mirrors its definition.
pub(crate) fn linked_weights(
    counts: &CountState,
    hyper: &Hyperparams,
    infl: &InfluenceSets,
    doc: usize,
    term: usize,
    out: &mut [f64],
) -> Result<f64> {
    let k = hyper.topic_count();
    let members = infl.members(doc);
    debug_assert_eq!(out.len(), members.len() * k);
    let beta_w = hyper.beta()[term];
    let beta_sum = hyper.beta_sum();
    let alpha = hyper.alpha();
    let alpha_sum = hyper.alpha_sum();
    let m_row = &counts.doc_influencer[doc];
    let mut influence_denom = infl.gamma_sum(doc);
    for &m in m_row {
        influence_denom += checked_count(m, "influence count")?;
    }
    let inv_influence = 1.0 / influence_denom;
    let term_row = counts.term_topic.row(term);
    let gamma = infl.gamma(doc);
    let mut total = 0.0;
    for (i, (&r, &g)) in members.iter().zip(gamma).enumerate() {
        let m_dr = checked_count(m_row[i], "influence count")?;
        let r_total = checked_count(counts.influenced_total[r], "influenced token total")?;
        let member_factor = (m_dr + g) * inv_influence / (r_total + alpha_sum);
        let doc_row = counts.doc_topic.row(r);
        let base = i * k;
        for z in 0..k {
            let n_rz = checked_count(doc_row[z], "document-topic count")?;
            let n_zw = checked_count(term_row[z], "term-topic count")?;
            let n_z = checked_count(counts.topic_total[z], "topic total")?;
            let w = (n_rz + alpha[z]) * member_factor * (n_zw + beta_w) / (n_z + beta_sum);
            out[base + z] = w;
            total += w;
        }
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Consistency(format!(
            "conditional mass {total} is not positive and finite"
        )));
    }
    Ok(total)
}

/// Normalized LDA conditional for one token of `term` in `doc`, computed on
/// counts from which that token's mass has already been removed.
pub fn conditional_lda(
    counts: &CountState,
    hyper: &Hyperparams,
    doc: usize,
    term: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; hyper.topic_count()];
    let total = lda_weights(counts, hyper, doc, term, &mut out)?;
    for w in &mut out {
        *w /= total;
    }
    Ok(out)
}

/// Normalized linked-model conditional over (influencer, topic) outcomes,
/// influencer-major with the document itself first; same exclusion
/// convention as [`conditional_lda`].
pub fn conditional_linked(
    counts: &CountState,
    hyper: &Hyperparams,
    infl: &InfluenceSets,
    doc: usize,
    term: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; infl.set_size(doc) * hyper.topic_count()];
    let total = linked_weights(counts, hyper, infl, doc, term, &mut out)?;
    for w in &mut out {
        *w /= total;
    }
    Ok(out)
}

/// Adds `delta` tokens' worth of a single outcome to every affected table.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_outcome(
    counts: &mut CountState,
    model_kind: ModelKind,
    infl: Option<&InfluenceSets>,
    doc: usize,
    term: usize,
    outcome: usize,
    k: usize,
    delta: f64,
) {
    let z = outcome % k;
    let r = match model_kind {
        ModelKind::Lda => doc,
        ModelKind::Linked => {
            let i = outcome / k;
            counts.doc_influencer[doc][i] += delta;
            infl.expect("linked model requires influence sets").members(doc)[i]
        }
    };
    counts.doc_topic.add(r, z, delta);
    counts.influenced_total[r] += delta;
    counts.term_topic.add(term, z, delta);
    counts.topic_total[z] += delta;
}

/// Adds `sign` times a whole per-outcome mass vector to the count tables.
fn apply_mass(
    counts: &mut CountState,
    model_kind: ModelKind,
    infl: Option<&InfluenceSets>,
    doc: usize,
    term: usize,
    mass: &[f64],
    sign: f64,
) {
    let k = counts.topic_count();
    match model_kind {
        ModelKind::Lda => {
            let mut doc_sum = 0.0;
            for (z, &m) in mass.iter().enumerate() {
                let m = m * sign;
                if m != 0.0 {
                    counts.doc_topic.add(doc, z, m);
                    counts.term_topic.add(term, z, m);
                    counts.topic_total[z] += m;
                    doc_sum += m;
                }
            }
            counts.influenced_total[doc] += doc_sum;
        }
        ModelKind::Linked => {
            let members = infl.expect("linked model requires influence sets").members(doc);
            for (i, &r) in members.iter().enumerate() {
                let base = i * k;
                let mut member_sum = 0.0;
                for z in 0..k {
                    let m = mass[base + z] * sign;
                    if m != 0.0 {
                        counts.doc_topic.add(r, z, m);
                        counts.term_topic.add(term, z, m);
                        counts.topic_total[z] += m;
                        member_sum += m;
                    }
                }
                counts.influenced_total[r] += member_sum;
                counts.doc_influencer[doc][i] += member_sum;
            }
        }
    }
}

/// Inverse-CDF draw over unnormalized weights; consumes one uniform variate.
#[inline]
fn draw_outcome(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Work counters, mostly for tests and benchmarks.
#[derive(Debug, Clone)]
pub struct SamplerStats {
    /// Number of conditional-distribution evaluations.
    pub conditional_evals: u64,
    /// Number of multinomial token draws.
    pub token_draws: u64,
    /// Per document, per group: how many times its assignment was rewritten.
    pub group_updates: Vec<Vec<u64>>,
}

impl SamplerStats {
    fn new(corpus: &Corpus) -> Self {
        SamplerStats {
            conditional_evals: 0,
            token_draws: 0,
            group_updates: corpus
                .documents()
                .iter()
                .map(|d| vec![0u64; d.distinct_terms()])
                .collect(),
        }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub wall_ms: f64,
    /// In-sample likelihood score, present on evaluation iterations only.
    pub likelihood: Option<f64>,
}

struct SweepCtx<'b> {
    corpus: &'b Corpus,
    hyper: &'b Hyperparams,
    model_kind: ModelKind,
    infl: Option<&'b InfluenceSets>,
}

fn fill_weights(
    ctx: &SweepCtx,
    counts: &CountState,
    doc: usize,
    term: usize,
    out: &mut [f64],
) -> Result<f64> {
    match ctx.model_kind {
        ModelKind::Lda => lda_weights(counts, ctx.hyper, doc, term, out),
        ModelKind::Linked => linked_weights(
            counts,
            ctx.hyper,
            ctx.infl.expect("linked model requires influence sets"),
            doc,
            term,
            out,
        ),
    }
}

fn sweep_plain(
    ctx: &SweepCtx,
    assignments: &mut AssignmentState,
    counts: &mut CountState,
    scratch: &mut Vec<f64>,
    stats: &mut SamplerStats,
    rng: &mut ChaCha8Rng,
    docs: Range<usize>,
) -> Result<()> {
    let k = ctx.hyper.topic_count();
    for d in docs {
        let n_out = outcome_count(ctx.model_kind, ctx.infl, d, k);
        scratch.resize(n_out, 0.0);
        let groups = ctx.corpus.document(d).groups();
        for (g, (group, ga)) in groups.iter().zip(assignments.doc_mut(d)).enumerate() {
            let GroupAssignment::Drawn(slots) = ga else {
                return Err(Error::Consistency(format!(
                    "document {d}: the plain sweep requires per-token draws"
                )));
            };
            for slot in slots.iter_mut() {
                apply_outcome(counts, ctx.model_kind, ctx.infl, d, group.term, *slot as usize, k, -1.0);
                let total = fill_weights(ctx, counts, d, group.term, &mut scratch[..n_out])?;
                stats.conditional_evals += 1;
                let o = draw_outcome(&scratch[..n_out], total, rng);
                stats.token_draws += 1;
                apply_outcome(counts, ctx.model_kind, ctx.infl, d, group.term, o, k, 1.0);
                *slot = o as u32;
            }
            stats.group_updates[d][g] += 1;
        }
    }
    Ok(())
}

/// Aggregated update of one group: evaluate the conditional once with only
/// the group's first occurrence excluded, then redraw every token from that
/// fixed distribution via the same inverse-CDF walk the plain sweep uses.
/// Because the distribution stays fixed across the group's draws, the
/// intermediate count movements are observable only to later groups, so old
/// and new occurrences cancel into one delta pass over the outcomes. The
/// stored group mass always equals the corpus frequency (validated when the
/// chain is assembled and preserved by every update), so `freq` is the
/// number of tokens to redraw.
#[allow(clippy::too_many_arguments)]
fn update_group_aggregated(
    ctx: &SweepCtx,
    counts: &mut CountState,
    ga: &mut GroupAssignment,
    doc: usize,
    group_idx: usize,
    term: usize,
    freq: u32,
    scratch: &mut [f64],
    hist: &mut [f64],
    stats: &mut SamplerStats,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let k = ctx.hyper.topic_count();
    let excluded = match ga {
        GroupAssignment::Drawn(v) => match v.first() {
            Some(&first) => first as usize,
            None => return Ok(()),
        },
        GroupAssignment::Counts(c) => c.iter().position(|&x| x > 0.0).ok_or_else(|| {
            Error::Consistency(format!("document {doc}: aggregated group holds no mass"))
        })?,
        GroupAssignment::Mass(_) => {
            return Err(Error::Consistency(format!(
                "document {doc}: aggregated sweep on a fractional group"
            )))
        }
    };
    apply_outcome(counts, ctx.model_kind, ctx.infl, doc, term, excluded, k, -1.0);
    let total = fill_weights(ctx, counts, doc, term, scratch)?;
    stats.conditional_evals += 1;

    match ga {
        GroupAssignment::Drawn(v) => {
            // The first occurrence is already removed; drop the rest.
            for &unit in &v[1..] {
                apply_outcome(counts, ctx.model_kind, ctx.infl, doc, term, unit as usize, k, -1.0);
            }
            for slot in v.iter_mut() {
                let o = draw_outcome(scratch, total, rng);
                stats.token_draws += 1;
                apply_outcome(counts, ctx.model_kind, ctx.infl, doc, term, o, k, 1.0);
                *slot = o as u32;
            }
        }
        GroupAssignment::Counts(c) => {
            hist.copy_from_slice(c);
            c.fill(0.0);
            for _ in 0..freq {
                let o = draw_outcome(scratch, total, rng);
                stats.token_draws += 1;
                c[o] += 1.0;
            }
            // Single pass: tables currently miss one occurrence at
            // `excluded`, so the move from the old histogram to the new one
            // is new - old, plus that unit back.
            for (o, (slot, &old)) in c.iter().zip(hist.iter()).enumerate() {
                let mut delta = slot - old;
                if o == excluded {
                    delta += 1.0;
                }
                if delta != 0.0 {
                    apply_outcome(counts, ctx.model_kind, ctx.infl, doc, term, o, k, delta);
                }
            }
        }
        GroupAssignment::Mass(_) => unreachable!(),
    }
    stats.group_updates[doc][group_idx] += 1;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_aggregated(
    ctx: &SweepCtx,
    assignments: &mut AssignmentState,
    counts: &mut CountState,
    scratch: &mut Vec<f64>,
    hist: &mut Vec<f64>,
    stats: &mut SamplerStats,
    rng: &mut ChaCha8Rng,
    docs: Range<usize>,
) -> Result<()> {
    let k = ctx.hyper.topic_count();
    for d in docs {
        let n_out = outcome_count(ctx.model_kind, ctx.infl, d, k);
        scratch.resize(n_out, 0.0);
        hist.resize(n_out, 0.0);
        let groups = ctx.corpus.document(d).groups();
        for (g, (group, ga)) in groups.iter().zip(assignments.doc_mut(d)).enumerate() {
            update_group_aggregated(
                ctx,
                counts,
                ga,
                d,
                g,
                group.term,
                group.freq,
                &mut scratch[..n_out],
                &mut hist[..n_out],
                stats,
                rng,
            )?;
        }
    }
    Ok(())
}

/// Deterministic update of one group: remove its stored fractional mass,
/// evaluate the conditional on the decremented counts, and store the whole
/// conditional back as the group's new mass.
#[allow(clippy::too_many_arguments)]
fn update_group_limit(
    ctx: &SweepCtx,
    counts: &mut CountState,
    ga: &mut GroupAssignment,
    doc: usize,
    group_idx: usize,
    term: usize,
    freq: u32,
    scratch: &mut [f64],
    stats: &mut SamplerStats,
) -> Result<()> {
    let GroupAssignment::Mass(mass) = ga else {
        return Err(Error::Consistency(format!(
            "document {doc}: the limit update requires fractional groups"
        )));
    };
    apply_mass(counts, ctx.model_kind, ctx.infl, doc, term, mass, -1.0);
    let total = fill_weights(ctx, counts, doc, term, scratch)?;
    stats.conditional_evals += 1;
    let factor = f64::from(freq) / total;
    for (m, &w) in mass.iter_mut().zip(scratch.iter()) {
        *m = w * factor;
    }
    apply_mass(counts, ctx.model_kind, ctx.infl, doc, term, mass, 1.0);
    stats.group_updates[doc][group_idx] += 1;
    Ok(())
}

fn sweep_limit(
    ctx: &SweepCtx,
    assignments: &mut AssignmentState,
    counts: &mut CountState,
    scratch: &mut Vec<f64>,
    stats: &mut SamplerStats,
    docs: Range<usize>,
) -> Result<()> {
    let k = ctx.hyper.topic_count();
    for d in docs {
        let n_out = outcome_count(ctx.model_kind, ctx.infl, d, k);
        scratch.resize(n_out, 0.0);
        let groups = ctx.corpus.document(d).groups();
        for (g, (group, ga)) in groups.iter().zip(assignments.doc_mut(d)).enumerate() {
            update_group_limit(
                ctx,
                counts,
                ga,
                d,
                g,
                group.term,
                group.freq,
                &mut scratch[..n_out],
                stats,
            )?;
        }
    }
    Ok(())
}

/// Lazy sweep: per document, draw `max(1, round(length/ell))` group indices
/// with replacement, with probability proportional to term frequency, and
/// apply the base update to each in draw order. Undrawn groups keep their
/// stale assignments.
#[allow(clippy::too_many_arguments)]
fn sweep_sparse(
    ctx: &SweepCtx,
    assignments: &mut AssignmentState,
    counts: &mut CountState,
    scratch: &mut Vec<f64>,
    hist: &mut Vec<f64>,
    stats: &mut SamplerStats,
    rng: &mut ChaCha8Rng,
    docs: Range<usize>,
    ell: f64,
    base: Strategy,
    freq_cumsum: &[Vec<f64>],
) -> Result<()> {
    let k = ctx.hyper.topic_count();
    for d in docs {
        let doc = ctx.corpus.document(d);
        if doc.groups().is_empty() {
            continue;
        }
        let n_out = outcome_count(ctx.model_kind, ctx.infl, d, k);
        scratch.resize(n_out, 0.0);
        hist.resize(n_out, 0.0);
        let length = doc.length() as f64;
        let updates = (length / ell).round_ties_even().max(1.0) as u64;
        let cumsum = &freq_cumsum[d];
        for _ in 0..updates {
            let target = rng.random::<f64>() * length;
            let g = cumsum
                .partition_point(|&c| c <= target)
                .min(doc.groups().len() - 1);
            let group = doc.groups()[g];
            let ga = &mut assignments.doc_mut(d)[g];
            match base {
                Strategy::Limit => update_group_limit(
                    ctx,
                    counts,
                    ga,
                    d,
                    g,
                    group.term,
                    group.freq,
                    &mut scratch[..n_out],
                    stats,
                )?,
                Strategy::Aggregated => update_group_aggregated(
                    ctx,
                    counts,
                    ga,
                    d,
                    g,
                    group.term,
                    group.freq,
                    &mut scratch[..n_out],
                    &mut hist[..n_out],
                    stats,
                    rng,
                )?,
                _ => unreachable!("sparse base is limit or aggregated"),
            }
        }
    }
    Ok(())
}

/// One Gibbs chain with exclusive ownership of its mutable state. Chains
/// sharing a corpus may run concurrently.
pub struct GibbsChain<'a> {
    corpus: &'a Corpus,
    config: SamplerConfig,
    hyper: Hyperparams,
    infl: Option<InfluenceSets>,
    assignments: AssignmentState,
    counts: CountState,
    iteration: u64,
    freq_cumsum: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    hist: Vec<f64>,
    stats: SamplerStats,
}

impl<'a> GibbsChain<'a> {
    /// Fresh chain with seeded random initialization. For the linked model
    /// the influence sets are built with the standard smoothing construction.
    pub fn new(corpus: &'a Corpus, config: SamplerConfig, hyper: Hyperparams) -> Result<Self> {
        config.validate()?;
        let infl = match config.model_kind {
            ModelKind::Lda => None,
            ModelKind::Linked => Some(InfluenceSets::build(corpus, hyper.gamma_scale())?),
        };
        let assignments = init_assignments(
            corpus,
            config.model_kind,
            config.strategy,
            hyper.topic_count(),
            config.seed,
        );
        Self::assemble(corpus, config, hyper, infl, assignments, 0)
    }

    /// Fresh chain with caller-supplied influence sets (linked model only).
    pub fn with_influence(
        corpus: &'a Corpus,
        config: SamplerConfig,
        hyper: Hyperparams,
        infl: InfluenceSets,
    ) -> Result<Self> {
        config.validate()?;
        if config.model_kind != ModelKind::Linked {
            return Err(Error::Validation(
                "influence sets apply to the linked model only".into(),
            ));
        }
        let assignments = init_assignments(
            corpus,
            config.model_kind,
            config.strategy,
            hyper.topic_count(),
            config.seed,
        );
        Self::assemble(corpus, config, hyper, Some(infl), assignments, 0)
    }

    /// Chain resuming from explicit assignments; counts are rebuilt from
    /// them, and the iteration counter continues at `iteration`.
    pub fn with_assignments(
        corpus: &'a Corpus,
        config: SamplerConfig,
        hyper: Hyperparams,
        infl: Option<InfluenceSets>,
        assignments: AssignmentState,
        iteration: u64,
    ) -> Result<Self> {
        config.validate()?;
        let infl = match (config.model_kind, infl) {
            (ModelKind::Lda, None) => None,
            (ModelKind::Lda, Some(_)) => {
                return Err(Error::Validation(
                    "influence sets apply to the linked model only".into(),
                ))
            }
            (ModelKind::Linked, Some(i)) => Some(i),
            (ModelKind::Linked, None) => Some(InfluenceSets::build(corpus, hyper.gamma_scale())?),
        };
        Self::assemble(corpus, config, hyper, infl, assignments, iteration)
    }

    /// Rebuilds a chain from a checkpoint. The corpus must match the
    /// dimensions recorded at save time.
    pub fn from_checkpoint(corpus: &'a Corpus, ck: Checkpoint) -> Result<Self> {
        if ck.vocab_size != corpus.vocab_size() {
            return Err(Error::Validation(format!(
                "checkpoint was saved with vocabulary size {}, corpus has {}",
                ck.vocab_size,
                corpus.vocab_size()
            )));
        }
        if ck.doc_count != corpus.doc_count() {
            return Err(Error::Validation(format!(
                "checkpoint was saved with {} documents, corpus has {}",
                ck.doc_count,
                corpus.doc_count()
            )));
        }
        let hyper = Hyperparams::new(ck.alpha, ck.beta, ck.gamma_scale)?;
        if hyper.topic_count() != ck.topic_count {
            return Err(Error::Validation(
                "checkpoint topic count disagrees with its alpha vector".into(),
            ));
        }
        let config = SamplerConfig {
            model_kind: ck.model_kind,
            strategy: ck.strategy,
            sparsity_ell: ck.sparsity_ell,
            iterations: 50,
            seed: ck.seed,
            recount_every: ck.recount_every,
        };
        Self::with_assignments(corpus, config, hyper, None, ck.assignments, ck.iteration)
    }

    fn assemble(
        corpus: &'a Corpus,
        config: SamplerConfig,
        hyper: Hyperparams,
        infl: Option<InfluenceSets>,
        assignments: AssignmentState,
        iteration: u64,
    ) -> Result<Self> {
        if assignments.model_kind() != config.model_kind {
            return Err(Error::Validation(
                "assignment state was built for a different model kind".into(),
            ));
        }
        if let Some(sets) = &infl {
            if sets.doc_count() != corpus.doc_count() {
                return Err(Error::Validation(format!(
                    "influence sets cover {} documents, corpus has {}",
                    sets.doc_count(),
                    corpus.doc_count()
                )));
            }
        }
        let max_outcomes = (0..corpus.doc_count())
            .map(|d| outcome_count(config.model_kind, infl.as_ref(), d, hyper.topic_count()))
            .max()
            .unwrap_or(hyper.topic_count());
        if max_outcomes > u32::MAX as usize {
            return Err(Error::Validation(
                "outcome space exceeds the assignment encoding range".into(),
            ));
        }
        let counts =
            counts_from_assignments(corpus, &assignments, infl.as_ref(), hyper.topic_count())?;
        let freq_cumsum = if config.strategy.lazy() {
            corpus
                .documents()
                .iter()
                .map(|doc| {
                    let mut acc = 0.0;
                    doc.groups()
                        .iter()
                        .map(|g| {
                            acc += f64::from(g.freq);
                            acc
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let stats = SamplerStats::new(corpus);
        Ok(GibbsChain {
            corpus,
            config,
            hyper,
            infl,
            assignments,
            counts,
            iteration,
            freq_cumsum,
            scratch: Vec::new(),
            hist: Vec::new(),
            stats,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn influence(&self) -> Option<&InfluenceSets> {
        self.infl.as_ref()
    }

    pub fn assignments(&self) -> &AssignmentState {
        &self.assignments
    }

    pub fn counts(&self) -> &CountState {
        &self.counts
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn stats(&self) -> &SamplerStats {
        &self.stats
    }

    pub fn into_state(self) -> (AssignmentState, CountState) {
        (self.assignments, self.counts)
    }

    /// Runs one full sweep over all documents.
    pub fn step(&mut self) -> Result<()> {
        self.step_over(0..self.corpus.doc_count())
    }

    /// Runs one sweep restricted to `docs`; assignments of other documents
    /// are left untouched (their counts still participate). The iteration
    /// counter and its random stream advance exactly as in [`Self::step`].
    pub(crate) fn step_over(&mut self, docs: Range<usize>) -> Result<()> {
        let mut rng = derived_rng(self.config.seed, self.iteration + 1);
        self.sweep(docs, &mut rng)?;
        self.iteration += 1;
        if self.iteration.is_multiple_of(self.config.recount_every as u64) {
            self.recount()?;
        }
        Ok(())
    }

    fn sweep(&mut self, docs: Range<usize>, rng: &mut ChaCha8Rng) -> Result<()> {
        let GibbsChain {
            corpus,
            config,
            hyper,
            infl,
            assignments,
            counts,
            freq_cumsum,
            scratch,
            hist,
            stats,
            ..
        } = self;
        let ctx = SweepCtx {
            corpus,
            hyper,
            model_kind: config.model_kind,
            infl: infl.as_ref(),
        };
        match config.strategy {
            Strategy::Plain => sweep_plain(&ctx, assignments, counts, scratch, stats, rng, docs),
            Strategy::Aggregated => {
                sweep_aggregated(&ctx, assignments, counts, scratch, hist, stats, rng, docs)
            }
            Strategy::Limit => sweep_limit(&ctx, assignments, counts, scratch, stats, docs),
            Strategy::Sparse => sweep_sparse(
                &ctx,
                assignments,
                counts,
                scratch,
                hist,
                stats,
                rng,
                docs,
                self.config.sparsity_ell.expect("validated"),
                Strategy::Limit,
                freq_cumsum,
            ),
            Strategy::AggregatedSparse => sweep_sparse(
                &ctx,
                assignments,
                counts,
                scratch,
                hist,
                stats,
                rng,
                docs,
                self.config.sparsity_ell.expect("validated"),
                Strategy::Aggregated,
                freq_cumsum,
            ),
        }
    }

    /// Rebuilds all count tables from the assignments, replacing the
    /// incrementally maintained ones; returns the largest drift observed.
    pub fn recount(&mut self) -> Result<f64> {
        let fresh = counts_from_assignments(
            self.corpus,
            &self.assignments,
            self.infl.as_ref(),
            self.hyper.topic_count(),
        )?;
        let drift = fresh.max_abs_diff(&self.counts);
        self.counts = fresh;
        Ok(drift)
    }

    /// Runs `iterations` steps, timing each sweep; when `eval_every > 0`, the
    /// in-sample likelihood score is computed every that many iterations.
    pub fn run(&mut self, iterations: usize, eval_every: usize) -> Result<Vec<IterationRecord>> {
        let mut records = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            let started = Instant::now();
            self.step()?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let likelihood = if eval_every > 0 && self.iteration.is_multiple_of(eval_every as u64)
            {
                let model = self.estimate();
                Some(
                    estimate::heldout_likelihood(&model, self.corpus, self.config.model_kind)?
                        .score,
                )
            } else {
                None
            };
            records.push(IterationRecord {
                iteration: self.iteration,
                wall_ms,
                likelihood,
            });
        }
        Ok(records)
    }

    /// Point estimates from the current counts.
    pub fn estimate(&self) -> TopicModel {
        estimate::estimate_model(&self.counts, &self.hyper, self.infl.as_ref())
    }

    /// Snapshot of everything needed to resume this chain.
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model_kind: self.config.model_kind,
            strategy: self.config.strategy,
            topic_count: self.hyper.topic_count(),
            vocab_size: self.corpus.vocab_size(),
            doc_count: self.corpus.doc_count(),
            iteration: self.iteration,
            seed: self.config.seed,
            alpha: self.hyper.alpha().to_vec(),
            beta: self.hyper.beta().to_vec(),
            gamma_scale: self.hyper.gamma_scale(),
            sparsity_ell: self.config.sparsity_ell,
            recount_every: self.config.recount_every,
            assignments: self.assignments.clone(),
        }
    }
}

/// Convenience wrapper: fresh chain, `config.iterations` steps, final state
/// plus the iteration log.
pub fn run_chain(
    corpus: &Corpus,
    config: &SamplerConfig,
    hyper: &Hyperparams,
    eval_every: usize,
) -> Result<(AssignmentState, CountState, Vec<IterationRecord>)> {
    let mut chain = GibbsChain::new(corpus, config.clone(), hyper.clone())?;
    let log = chain.run(config.iterations, eval_every)?;
    let (assignments, counts) = chain.into_state();
    Ok((assignments, counts, log))
}
