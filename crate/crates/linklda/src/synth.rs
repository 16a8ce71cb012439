//! Seeded synthetic corpus generators for tests and benchmarks: a
//! block-topic generator for speed/parity runs, a planted-influence
//! generator for influence-recovery checks, and a homophilous two-block
//! generator for stacked-learning checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use std::collections::BTreeMap;

use crate::corpus::{Corpus, Document, LinkGraph, Vocabulary};
use crate::error::{Error, Result};

fn numbered_vocab(size: usize) -> Vocabulary {
    Vocabulary::new((0..size).map(|w| format!("w{w}")).collect())
        .expect("generated names are unique and non-empty")
}

/// Inverse-CDF draw over a cumulative weight array.
fn draw_from_cumsum(cumsum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * cumsum[cumsum.len() - 1];
    cumsum
        .partition_point(|&c| c <= target)
        .min(cumsum.len() - 1)
}

fn doc_from_draws(draws: impl IntoIterator<Item = usize>) -> Document {
    let mut freq: BTreeMap<usize, u32> = BTreeMap::new();
    for term in draws {
        *freq.entry(term).or_insert(0) += 1;
    }
    Document::from_pairs(freq).expect("positive counts by construction")
}

/// Mean within-document term frequency: total positions divided by the
/// total number of (document, term) groups.
pub fn mean_within_doc_tf(corpus: &Corpus) -> f64 {
    let groups: usize = corpus
        .documents()
        .iter()
        .map(|d| d.distinct_terms())
        .sum();
    if groups == 0 {
        return 0.0;
    }
    corpus.total_positions() as f64 / groups as f64
}

/// Block-topic corpus for speed and parity runs.
#[derive(Debug, Clone)]
pub struct BlockTopicConfig {
    pub doc_count: usize,
    pub vocab_size: usize,
    pub topic_count: usize,
    pub doc_length: u32,
    /// Dirichlet concentration for per-document topic mixtures; small
    /// values concentrate each document on few topics, which raises the
    /// mean within-document term frequency.
    pub mixture_concentration: f64,
    pub seed: u64,
}

impl BlockTopicConfig {
    pub fn new(doc_count: usize, vocab_size: usize, topic_count: usize, doc_length: u32) -> Self {
        BlockTopicConfig {
            doc_count,
            vocab_size,
            topic_count,
            doc_length,
            mixture_concentration: 0.2,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Generates an unlinked corpus from a block topic structure: topic `z`
/// owns an equal slice of the vocabulary with power-law term weights inside
/// the slice, and each document draws its tokens from a Dirichlet topic
/// mixture. Deterministic in the seed.
pub fn block_topic_corpus(cfg: &BlockTopicConfig) -> Result<Corpus> {
    if cfg.topic_count == 0 || cfg.vocab_size < cfg.topic_count {
        return Err(Error::Validation(format!(
            "block generator needs at least one term per topic ({} terms, {} topics)",
            cfg.vocab_size, cfg.topic_count
        )));
    }
    if cfg.doc_length == 0 {
        return Err(Error::Validation("documents must have at least one token".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.topic_count;

    // Topic z owns terms [block_start(z), block_start(z+1)) with weights
    // 1/(rank+1)^2, so a handful of terms carry most of each topic's mass
    // and documents repeat terms heavily.
    let block_bounds: Vec<usize> = (0..=k).map(|z| z * cfg.vocab_size / k).collect();
    let topic_cumsums: Vec<Vec<f64>> = (0..k)
        .map(|z| {
            let size = block_bounds[z + 1] - block_bounds[z];
            let mut acc = 0.0;
            (0..size)
                .map(|r| {
                    acc += ((r + 1) as f64).powi(-2);
                    acc
                })
                .collect()
        })
        .collect();

    // Symmetric Dirichlet mixtures via normalized Gamma draws; the
    // inverse-CDF helper works on unnormalized cumulative weights.
    let gamma = Gamma::new(cfg.mixture_concentration, 1.0)
        .map_err(|e| Error::Validation(format!("mixture concentration: {e}")))?;
    let documents = (0..cfg.doc_count)
        .map(|_| {
            let mut acc = 0.0;
            let theta_cumsum: Vec<f64> = (0..k)
                .map(|_| {
                    acc += gamma.sample(&mut rng);
                    acc
                })
                .collect();
            let draws = (0..cfg.doc_length).map(|_| {
                let z = draw_from_cumsum(&theta_cumsum, &mut rng);
                block_bounds[z] + draw_from_cumsum(&topic_cumsums[z], &mut rng)
            });
            doc_from_draws(draws)
        })
        .collect();
    Corpus::unlabeled(
        numbered_vocab(cfg.vocab_size),
        documents,
        LinkGraph::empty(cfg.doc_count),
    )
}

/// Planted-influence corpus for influence-recovery checks.
#[derive(Debug, Clone)]
pub struct PlantedInfluenceConfig {
    pub hub_count: usize,
    pub followers_per_hub: usize,
    /// Vocabulary slice owned by each hub topic and by the shared
    /// background topic.
    pub terms_per_topic: usize,
    pub doc_length: u32,
    /// Fraction of each follower's tokens drawn from its hub's topic.
    pub borrow_fraction: f64,
    pub seed: u64,
}

impl PlantedInfluenceConfig {
    pub fn new(hub_count: usize, followers_per_hub: usize) -> Self {
        PlantedInfluenceConfig {
            hub_count,
            followers_per_hub,
            terms_per_topic: 20,
            doc_length: 60,
            borrow_fraction: 0.7,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Generated planted-influence corpus plus the index ranges of its parts.
#[derive(Debug, Clone)]
pub struct PlantedInfluenceCorpus {
    pub corpus: Corpus,
    /// Documents `0..hub_count` are hubs; the rest are followers.
    pub hub_count: usize,
}

/// Hubs write purely in their own topic; each follower links to exactly one
/// hub and draws `borrow_fraction` of its tokens from that hub's topic and
/// the rest from a shared background topic. A follower's tokens are thus
/// better explained by crediting its hub, which is what influence recovery
/// must detect.
pub fn planted_influence_corpus(cfg: &PlantedInfluenceConfig) -> Result<PlantedInfluenceCorpus> {
    if cfg.hub_count == 0 || cfg.followers_per_hub == 0 {
        return Err(Error::Validation(
            "planted generator needs at least one hub and one follower".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.borrow_fraction) {
        return Err(Error::Validation(format!(
            "borrow fraction must lie in [0, 1], got {}",
            cfg.borrow_fraction
        )));
    }
    if cfg.terms_per_topic == 0 || cfg.doc_length == 0 {
        return Err(Error::Validation(
            "planted generator needs positive term and token counts".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topics = cfg.hub_count + 1; // one per hub plus shared background
    let vocab_size = topics * cfg.terms_per_topic;
    let background = cfg.hub_count;
    let topic_term = |topic: usize, rng: &mut ChaCha8Rng| {
        topic * cfg.terms_per_topic + rng.random_range(0..cfg.terms_per_topic)
    };

    let mut documents = Vec::new();
    let mut edges = Vec::new();
    for hub in 0..cfg.hub_count {
        let draws: Vec<usize> = (0..cfg.doc_length).map(|_| topic_term(hub, &mut rng)).collect();
        documents.push(doc_from_draws(draws));
    }
    for hub in 0..cfg.hub_count {
        for _ in 0..cfg.followers_per_hub {
            let follower = documents.len();
            let draws: Vec<usize> = (0..cfg.doc_length)
                .map(|_| {
                    if rng.random::<f64>() < cfg.borrow_fraction {
                        topic_term(hub, &mut rng)
                    } else {
                        topic_term(background, &mut rng)
                    }
                })
                .collect();
            documents.push(doc_from_draws(draws));
            edges.push((follower, hub, 1.0));
        }
    }
    let doc_count = documents.len();
    let corpus = Corpus::unlabeled(
        numbered_vocab(vocab_size),
        documents,
        LinkGraph::from_edges(doc_count, edges)?,
    )?;
    Ok(PlantedInfluenceCorpus {
        corpus,
        hub_count: cfg.hub_count,
    })
}

/// Homophilous two-block corpus for stacked-learning checks.
#[derive(Debug, Clone)]
pub struct HomophilyConfig {
    pub doc_count: usize,
    /// Terms per block topic; total vocabulary is twice this.
    pub terms_per_block: usize,
    pub doc_length: u32,
    /// Probability that a token comes from the opposite block's topic,
    /// blurring the per-document evidence.
    pub noise: f64,
    pub outlinks_per_doc: usize,
    /// Probability that an outlink stays within the document's block.
    pub within_block: f64,
    pub seed: u64,
}

impl HomophilyConfig {
    pub fn new(doc_count: usize) -> Self {
        HomophilyConfig {
            doc_count,
            terms_per_block: 15,
            doc_length: 20,
            noise: 0.35,
            outlinks_per_doc: 3,
            within_block: 0.9,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Two equal blocks of documents labeled "0" and "1". Documents draw most
/// tokens from their block's term slice (with `noise` leakage from the
/// other block) and link mostly within their block, so link structure
/// carries label signal beyond the per-document term evidence.
pub fn homophily_corpus(cfg: &HomophilyConfig) -> Result<Corpus> {
    if cfg.doc_count < 4 {
        return Err(Error::Validation(
            "homophily generator needs at least 4 documents".into(),
        ));
    }
    if cfg.terms_per_block == 0 || cfg.doc_length == 0 {
        return Err(Error::Validation(
            "homophily generator needs positive term and token counts".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.noise) || !(0.0..=1.0).contains(&cfg.within_block) {
        return Err(Error::Validation(
            "noise and within-block probabilities must lie in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let block_of = |d: usize| d % 2;
    let documents = (0..cfg.doc_count)
        .map(|d| {
            let own = block_of(d);
            let draws: Vec<usize> = (0..cfg.doc_length)
                .map(|_| {
                    let block = if rng.random::<f64>() < cfg.noise { 1 - own } else { own };
                    block * cfg.terms_per_block + rng.random_range(0..cfg.terms_per_block)
                })
                .collect();
            doc_from_draws(draws)
        })
        .collect();

    let mut edges = Vec::new();
    for d in 0..cfg.doc_count {
        let own = block_of(d);
        let mut chosen = std::collections::BTreeSet::new();
        let mut guard = 0;
        while chosen.len() < cfg.outlinks_per_doc && guard < 200 {
            guard += 1;
            let block = if rng.random::<f64>() < cfg.within_block { own } else { 1 - own };
            // Documents of `block` are block, block+2, block+4, ...
            let pick = block + 2 * rng.random_range(0..cfg.doc_count / 2);
            if pick != d && pick < cfg.doc_count {
                chosen.insert(pick);
            }
        }
        for t in chosen {
            edges.push((d, t, 1.0));
        }
    }
    let labels = (0..cfg.doc_count)
        .map(|d| Some(block_of(d).to_string()))
        .collect();
    Corpus::new(
        numbered_vocab(2 * cfg.terms_per_block),
        documents,
        LinkGraph::from_edges(cfg.doc_count, edges)?,
        labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_topic_generator_is_deterministic() {
        let cfg = BlockTopicConfig::new(12, 40, 4, 30).with_seed(9);
        let a = block_topic_corpus(&cfg).unwrap();
        let b = block_topic_corpus(&cfg).unwrap();
        assert_eq!(a, b);
        let c = block_topic_corpus(&BlockTopicConfig::new(12, 40, 4, 30).with_seed(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn block_topic_generator_matches_requested_shape() {
        let cfg = BlockTopicConfig::new(7, 50, 5, 25).with_seed(1);
        let corpus = block_topic_corpus(&cfg).unwrap();
        assert_eq!(corpus.doc_count(), 7);
        assert_eq!(corpus.vocab_size(), 50);
        assert_eq!(corpus.links().edge_count(), 0);
        for d in 0..7 {
            assert_eq!(corpus.document(d).length(), 25);
        }
    }

    #[test]
    fn benchmark_scale_corpus_has_high_term_repetition() {
        // The shape used by the speed comparisons: long documents over a
        // concentrated topic mixture must repeat terms heavily.
        let cfg = BlockTopicConfig::new(50, 1000, 10, 200).with_seed(2);
        let corpus = block_topic_corpus(&cfg).unwrap();
        let tf = mean_within_doc_tf(&corpus);
        assert!(tf >= 5.0, "mean within-document term frequency {tf} < 5");
    }

    #[test]
    fn planted_influence_links_followers_to_hubs() {
        let cfg = PlantedInfluenceConfig::new(3, 4).with_seed(3);
        let planted = planted_influence_corpus(&cfg).unwrap();
        let corpus = &planted.corpus;
        assert_eq!(corpus.doc_count(), 3 + 12);
        for hub in 0..3 {
            assert!(corpus.links().outlinks(hub).is_empty());
        }
        for follower in 3..15 {
            let outs = corpus.links().outlinks(follower);
            assert_eq!(outs.len(), 1);
            assert!(outs[0].0 < 3);
        }
    }

    #[test]
    fn planted_influence_borrow_fraction_is_respected() {
        let cfg = PlantedInfluenceConfig {
            doc_length: 4000,
            ..PlantedInfluenceConfig::new(2, 2).with_seed(4)
        };
        let planted = planted_influence_corpus(&cfg).unwrap();
        let corpus = &planted.corpus;
        for follower in 2..6 {
            let hub = corpus.links().outlinks(follower)[0].0;
            let hub_block = hub * cfg.terms_per_topic..(hub + 1) * cfg.terms_per_topic;
            let borrowed: u64 = corpus
                .document(follower)
                .groups()
                .iter()
                .filter(|g| hub_block.contains(&g.term))
                .map(|g| u64::from(g.freq))
                .sum();
            let fraction = borrowed as f64 / corpus.document(follower).length() as f64;
            assert!(
                (fraction - 0.7).abs() < 0.05,
                "follower {follower} borrowed fraction {fraction}"
            );
        }
    }

    #[test]
    fn homophily_links_stay_mostly_within_block() {
        let cfg = HomophilyConfig::new(100).with_seed(5);
        let corpus = homophily_corpus(&cfg).unwrap();
        let mut within = 0usize;
        let mut total = 0usize;
        for (s, t, _) in corpus.links().edges() {
            total += 1;
            if s % 2 == t % 2 {
                within += 1;
            }
        }
        let fraction = within as f64 / total as f64;
        assert!(
            (fraction - 0.9).abs() < 0.08,
            "within-block fraction {fraction}"
        );
        for d in 0..corpus.doc_count() {
            assert_eq!(corpus.label(d), Some(if d % 2 == 0 { "0" } else { "1" }));
        }
    }

    #[test]
    fn generators_reject_bad_parameters() {
        assert!(block_topic_corpus(&BlockTopicConfig::new(5, 2, 4, 10)).is_err());
        assert!(planted_influence_corpus(&PlantedInfluenceConfig {
            borrow_fraction: 1.5,
            ..PlantedInfluenceConfig::new(2, 2)
        })
        .is_err());
        assert!(homophily_corpus(&HomophilyConfig::new(2)).is_err());
    }
}
