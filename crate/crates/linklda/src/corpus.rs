//! Tokenized document collections with an optional weighted link graph and
//! optional per-document category labels.
//!
//! On-disk formats are whitespace-separated plain text:
//!
//! * documents: one `<doc_id> <term_id> <count>` triple per line;
//! * vocabulary: one term per line, line number = term id;
//! * links: one `<src_doc_id> <dst_doc_id> <weight>` triple per line;
//! * labels: one `<doc_id> <category>` pair per line.
//!
//! Document ids found in the documents file are renumbered densely in
//! ascending order of their raw id; link endpoints and label ids must refer to
//! documents present in the documents file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Term strings with dense integer ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary; terms must be distinct and non-empty.
    pub fn new(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (id, term) in terms.iter().enumerate() {
            if term.is_empty() {
                return Err(Error::Validation(format!("vocabulary term {id} is empty")));
            }
            if index.insert(term.clone(), id).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate vocabulary term {term:?}"
                )));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// One (term, frequency) group inside a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermGroup {
    pub term: usize,
    pub freq: u32,
}

/// A bag-of-words document. Occurrences of the same term form a single group;
/// groups are sorted by term id.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    groups: Vec<TermGroup>,
    length: u64,
}

impl Document {
    /// Builds a document from (term, frequency) pairs, merging repeated terms.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut merged: BTreeMap<usize, u64> = BTreeMap::new();
        for (term, freq) in pairs {
            if freq == 0 {
                return Err(Error::Validation(format!(
                    "term {term} has zero frequency; counts must be positive"
                )));
            }
            *merged.entry(term).or_insert(0) += u64::from(freq);
        }
        let mut groups = Vec::with_capacity(merged.len());
        let mut length = 0u64;
        for (term, freq) in merged {
            let freq = u32::try_from(freq).map_err(|_| {
                Error::Validation(format!("term {term} frequency overflows u32"))
            })?;
            groups.push(TermGroup { term, freq });
            length += u64::from(freq);
        }
        Ok(Document { groups, length })
    }

    pub fn groups(&self) -> &[TermGroup] {
        &self.groups
    }

    /// Total token count (sum of group frequencies).
    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn distinct_terms(&self) -> usize {
        self.groups.len()
    }
}

/// Directed weighted links between documents. Adjacency lists are sorted by
/// target id; duplicate edges are merged by summing their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    outlinks: Vec<Vec<(usize, f64)>>,
}

impl LinkGraph {
    pub fn empty(doc_count: usize) -> Self {
        LinkGraph {
            outlinks: vec![Vec::new(); doc_count],
        }
    }

    /// Builds a graph from (src, dst, weight) edges. Self-loops, endpoints
    /// outside `0..doc_count`, and non-positive or non-finite weights are
    /// rejected.
    pub fn from_edges(
        doc_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); doc_count];
        for (src, dst, weight) in edges {
            if src >= doc_count || dst >= doc_count {
                return Err(Error::Validation(format!(
                    "link {src} -> {dst} references a document outside 0..{doc_count}"
                )));
            }
            if src == dst {
                return Err(Error::Validation(format!("self-link on document {src}")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Validation(format!(
                    "link {src} -> {dst} has non-positive weight {weight}"
                )));
            }
            *adj[src].entry(dst).or_insert(0.0) += weight;
        }
        Ok(LinkGraph {
            outlinks: adj
                .into_iter()
                .map(|targets| targets.into_iter().collect())
                .collect(),
        })
    }

    pub fn doc_count(&self) -> usize {
        self.outlinks.len()
    }

    /// Outgoing edges of `doc` as (target, weight), sorted by target.
    pub fn outlinks(&self, doc: usize) -> &[(usize, f64)] {
        &self.outlinks[doc]
    }

    pub fn edge_count(&self) -> usize {
        self.outlinks.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.outlinks
            .iter()
            .enumerate()
            .flat_map(|(src, targets)| targets.iter().map(move |&(dst, w)| (src, dst, w)))
    }

    /// Graph with every edge direction flipped (weights kept).
    pub fn reversed(&self) -> LinkGraph {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.doc_count()];
        for (src, dst, w) in self.edges() {
            adj[dst].push((src, w));
        }
        for targets in &mut adj {
            targets.sort_by_key(|&(target, _)| target);
        }
        LinkGraph { outlinks: adj }
    }
}

/// A document collection: vocabulary, documents, link graph, and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
    links: LinkGraph,
    labels: Vec<Option<String>>,
}

impl Corpus {
    pub fn new(
        vocabulary: Vocabulary,
        documents: Vec<Document>,
        links: LinkGraph,
        labels: Vec<Option<String>>,
    ) -> Result<Self> {
        if links.doc_count() != documents.len() {
            return Err(Error::Validation(format!(
                "link graph covers {} documents but the corpus has {}",
                links.doc_count(),
                documents.len()
            )));
        }
        if labels.len() != documents.len() {
            return Err(Error::Validation(format!(
                "label vector covers {} documents but the corpus has {}",
                labels.len(),
                documents.len()
            )));
        }
        for (d, doc) in documents.iter().enumerate() {
            for group in doc.groups() {
                if group.term >= vocabulary.len() {
                    return Err(Error::Validation(format!(
                        "document {d} references term {} outside the vocabulary of size {}",
                        group.term,
                        vocabulary.len()
                    )));
                }
            }
        }
        Ok(Corpus {
            vocabulary,
            documents,
            links,
            labels,
        })
    }

    /// Convenience constructor for corpora without labels.
    pub fn unlabeled(
        vocabulary: Vocabulary,
        documents: Vec<Document>,
        links: LinkGraph,
    ) -> Result<Self> {
        let labels = vec![None; documents.len()];
        Corpus::new(vocabulary, documents, links, labels)
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn document(&self, d: usize) -> &Document {
        &self.documents[d]
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn links(&self) -> &LinkGraph {
        &self.links
    }

    pub fn label(&self, d: usize) -> Option<&str> {
        self.labels[d].as_deref()
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn labeled_docs(&self) -> Vec<usize> {
        (0..self.doc_count())
            .filter(|&d| self.labels[d].is_some())
            .collect()
    }

    /// Total token count over all documents.
    pub fn total_positions(&self) -> u64 {
        self.documents.iter().map(Document::length).sum()
    }

    /// Corpus-wide frequency of every term.
    pub fn term_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.vocab_size()];
        for doc in &self.documents {
            for group in doc.groups() {
                freq[group.term] += u64::from(group.freq);
            }
        }
        freq
    }

    /// Sub-corpus containing exactly the documents in `keep` (which must be
    /// strictly increasing), renumbered densely. Links with an endpoint
    /// outside `keep` are dropped; the vocabulary is carried over unchanged.
    pub fn restrict(&self, keep: &[usize]) -> Result<Corpus> {
        let mut remap: HashMap<usize, usize> = HashMap::with_capacity(keep.len());
        for (new_id, &old_id) in keep.iter().enumerate() {
            if old_id >= self.doc_count() {
                return Err(Error::Validation(format!(
                    "restrict: document {old_id} out of range"
                )));
            }
            if new_id > 0 && keep[new_id - 1] >= old_id {
                return Err(Error::Validation(
                    "restrict: document ids must be strictly increasing".into(),
                ));
            }
            remap.insert(old_id, new_id);
        }
        let documents: Vec<Document> = keep.iter().map(|&d| self.documents[d].clone()).collect();
        let labels: Vec<Option<String>> = keep.iter().map(|&d| self.labels[d].clone()).collect();
        let edges = self.links.edges().filter_map(|(src, dst, w)| {
            match (remap.get(&src), remap.get(&dst)) {
                (Some(&s), Some(&t)) => Some((s, t, w)),
                _ => None,
            }
        });
        let links = LinkGraph::from_edges(keep.len(), edges)?;
        Corpus::new(self.vocabulary.clone(), documents, links, labels)
    }

    /// Concatenates two corpora over the same vocabulary; documents of
    /// `second` are appended after those of `first` and its link targets are
    /// shifted accordingly.
    pub fn concat(first: &Corpus, second: &Corpus) -> Result<Corpus> {
        if first.vocabulary.terms != second.vocabulary.terms {
            return Err(Error::Validation(
                "concat: corpora use different vocabularies".into(),
            ));
        }
        let offset = first.doc_count();
        let mut documents = first.documents.clone();
        documents.extend(second.documents.iter().cloned());
        let mut labels = first.labels.clone();
        labels.extend(second.labels.iter().cloned());
        let edges = first.links.edges().chain(
            second
                .links
                .edges()
                .map(|(src, dst, w)| (src + offset, dst + offset, w)),
        );
        let links = LinkGraph::from_edges(documents.len(), edges)?;
        Corpus::new(first.vocabulary.clone(), documents, links, labels)
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn parse_usize(path: &Path, line_no: usize, token: &str, what: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::parse(path, line_no, format!("invalid {what} {token:?}")))
}

/// Loads a corpus from its component files. `links_path` and `labels_path`
/// are optional; omitting them yields an edgeless graph and all-`None` labels.
pub fn load_corpus(
    docs_path: &Path,
    vocab_path: &Path,
    links_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<Corpus> {
    let vocabulary = load_vocabulary(vocab_path)?;

    // Documents: gather (term, count) pairs per raw id, then renumber densely.
    let docs_text = fs::read_to_string(docs_path)?;
    let mut raw_docs: BTreeMap<usize, Vec<(usize, u32)>> = BTreeMap::new();
    for (idx, line) in docs_text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(line);
        if fields.len() != 3 {
            return Err(Error::parse(
                docs_path,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let doc_id = parse_usize(docs_path, line_no, fields[0], "document id")?;
        let term_id = parse_usize(docs_path, line_no, fields[1], "term id")?;
        let count = fields[2]
            .parse::<u32>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                Error::parse(
                    docs_path,
                    line_no,
                    format!("invalid count {:?}; counts must be positive integers", fields[2]),
                )
            })?;
        if term_id >= vocabulary.len() {
            return Err(Error::Validation(format!(
                "{}:{line_no}: term id {term_id} out of range for vocabulary of size {}",
                docs_path.display(),
                vocabulary.len()
            )));
        }
        raw_docs.entry(doc_id).or_default().push((term_id, count));
    }

    let raw_ids: Vec<usize> = raw_docs.keys().copied().collect();
    let id_map: HashMap<usize, usize> = raw_ids
        .iter()
        .enumerate()
        .map(|(new, &raw)| (raw, new))
        .collect();
    let documents: Vec<Document> = raw_docs
        .into_values()
        .map(Document::from_pairs)
        .collect::<Result<_>>()?;

    let links = match links_path {
        None => LinkGraph::empty(documents.len()),
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let mut edges = Vec::new();
            for (idx, line) in text.lines().enumerate() {
                let line_no = idx + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let fields = split_fields(line);
                if fields.len() != 3 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("expected 3 fields, found {}", fields.len()),
                    ));
                }
                let src_raw = parse_usize(path, line_no, fields[0], "source document id")?;
                let dst_raw = parse_usize(path, line_no, fields[1], "target document id")?;
                let weight = fields[2].parse::<f64>().map_err(|_| {
                    Error::parse(path, line_no, format!("invalid weight {:?}", fields[2]))
                })?;
                let src = *id_map.get(&src_raw).ok_or_else(|| {
                    Error::Validation(format!(
                        "{}:{line_no}: link source {src_raw} is not a known document",
                        path.display()
                    ))
                })?;
                let dst = *id_map.get(&dst_raw).ok_or_else(|| {
                    Error::Validation(format!(
                        "{}:{line_no}: link target {dst_raw} is not a known document",
                        path.display()
                    ))
                })?;
                edges.push((src, dst, weight));
            }
            LinkGraph::from_edges(documents.len(), edges)?
        }
    };

    let mut labels: Vec<Option<String>> = vec![None; documents.len()];
    if let Some(path) = labels_path {
        let text = fs::read_to_string(path)?;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_fields(line);
            if fields.len() != 2 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected 2 fields, found {}", fields.len()),
                ));
            }
            let doc_raw = parse_usize(path, line_no, fields[0], "document id")?;
            let doc = *id_map.get(&doc_raw).ok_or_else(|| {
                Error::Validation(format!(
                    "{}:{line_no}: label references unknown document {doc_raw}",
                    path.display()
                ))
            })?;
            if labels[doc].is_some() {
                return Err(Error::Validation(format!(
                    "{}:{line_no}: document {doc_raw} has more than one label",
                    path.display()
                )));
            }
            labels[doc] = Some(fields[1].to_string());
        }
    }

    Corpus::new(vocabulary, documents, links, labels)
}

fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path)?;
    let terms: Vec<String> = text.lines().map(str::to_string).collect();
    for (idx, term) in terms.iter().enumerate() {
        if term.is_empty() {
            return Err(Error::parse(path, idx + 1, "empty vocabulary line"));
        }
    }
    Vocabulary::new(terms)
}

/// Writes a corpus back to its component files. Documents are written with
/// their dense ids, so `load_corpus(write_corpus(c)) == c`.
pub fn write_corpus(
    corpus: &Corpus,
    docs_path: &Path,
    vocab_path: &Path,
    links_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<()> {
    let mut docs_text = String::new();
    for (d, doc) in corpus.documents().iter().enumerate() {
        for group in doc.groups() {
            let _ = writeln!(docs_text, "{d} {} {}", group.term, group.freq);
        }
    }
    fs::write(docs_path, docs_text)?;

    let mut vocab_text = String::new();
    for term in corpus.vocabulary().terms() {
        let _ = writeln!(vocab_text, "{term}");
    }
    fs::write(vocab_path, vocab_text)?;

    if let Some(path) = links_path {
        let mut text = String::new();
        for (src, dst, w) in corpus.links().edges() {
            let _ = writeln!(text, "{src} {dst} {w}");
        }
        fs::write(path, text)?;
    }

    if let Some(path) = labels_path {
        let mut text = String::new();
        for (d, label) in corpus.labels().iter().enumerate() {
            if let Some(label) = label {
                let _ = writeln!(text, "{d} {label}");
            }
        }
        fs::write(path, text)?;
    }
    Ok(())
}

/// Keeps the `keep_top` terms with highest corpus frequency (ties broken by
/// lower term id), drops all other tokens, and removes documents left empty.
/// Links with a dropped endpoint are removed; surviving documents and terms
/// are renumbered densely in their original order.
pub fn prune_vocabulary(corpus: &Corpus, keep_top: usize) -> Result<Corpus> {
    if keep_top == 0 {
        return Err(Error::Validation("prune_vocabulary: keep_top must be at least 1".into()));
    }
    let freq = corpus.term_frequencies();
    let mut order: Vec<usize> = (0..corpus.vocab_size()).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    let kept: BTreeSet<usize> = order.into_iter().take(keep_top).collect();

    let mut term_map: HashMap<usize, usize> = HashMap::with_capacity(kept.len());
    let mut terms = Vec::with_capacity(kept.len());
    for &old in &kept {
        term_map.insert(old, terms.len());
        terms.push(corpus.vocabulary().terms()[old].clone());
    }
    let vocabulary = Vocabulary::new(terms)?;

    let mut surviving = Vec::new();
    let mut documents = Vec::new();
    for (d, doc) in corpus.documents().iter().enumerate() {
        let pairs: Vec<(usize, u32)> = doc
            .groups()
            .iter()
            .filter_map(|g| term_map.get(&g.term).map(|&t| (t, g.freq)))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        surviving.push(d);
        documents.push(Document::from_pairs(pairs)?);
    }

    let doc_map: HashMap<usize, usize> = surviving
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let labels: Vec<Option<String>> = surviving.iter().map(|&d| corpus.labels()[d].clone()).collect();
    let edges = corpus.links().edges().filter_map(|(src, dst, w)| {
        match (doc_map.get(&src), doc_map.get(&dst)) {
            (Some(&s), Some(&t)) => Some((s, t, w)),
            _ => None,
        }
    });
    let links = LinkGraph::from_edges(documents.len(), edges)?;
    Corpus::new(vocabulary, documents, links, labels)
}

/// Caps every document's out-degree at `keep_top`, keeping its highest-weight
/// outlinks (ties broken by lower target id). Documents and terms are
/// untouched.
pub fn prune_outlinks(corpus: &Corpus, keep_top: usize) -> Result<Corpus> {
    if keep_top == 0 {
        return Err(Error::Validation("prune_outlinks: keep_top must be at least 1".into()));
    }
    let mut edges = Vec::new();
    for d in 0..corpus.doc_count() {
        let mut outs: Vec<(usize, f64)> = corpus.links().outlinks(d).to_vec();
        outs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(dst, w) in outs.iter().take(keep_top) {
            edges.push((d, dst, w));
        }
    }
    let links = LinkGraph::from_edges(corpus.doc_count(), edges)?;
    Corpus::new(
        corpus.vocabulary().clone(),
        corpus.documents().to_vec(),
        links,
        corpus.labels().to_vec(),
    )
}

/// Splits the labeled documents of `corpus` into `fold_count` near-even folds
/// with a seeded shuffle and returns `(train, test)` for `fold_index`: the
/// test corpus holds that fold, the train corpus everything else (unlabeled
/// documents included). Links crossing the split are dropped by restriction.
pub fn split_train_test(
    corpus: &Corpus,
    fold_count: usize,
    fold_index: usize,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    if fold_count == 0 {
        return Err(Error::Validation("split: fold_count must be at least 1".into()));
    }
    if fold_index >= fold_count {
        return Err(Error::Validation(format!(
            "split: fold index {fold_index} out of range for {fold_count} folds"
        )));
    }
    let mut labeled = corpus.labeled_docs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labeled.shuffle(&mut rng);
    let folds = partition_folds(labeled.len(), fold_count);
    let (start, end) = folds[fold_index];
    let test_set: BTreeSet<usize> = labeled[start..end].iter().copied().collect();
    let test_ids: Vec<usize> = test_set.iter().copied().collect();
    let train_ids: Vec<usize> = (0..corpus.doc_count())
        .filter(|d| !test_set.contains(d))
        .collect();
    Ok((corpus.restrict(&train_ids)?, corpus.restrict(&test_ids)?))
}

/// Half-open (start, end) ranges splitting `n` items into `fold_count` folds
/// whose sizes differ by at most one (earlier folds take the remainder).
pub(crate) fn partition_folds(n: usize, fold_count: usize) -> Vec<(usize, usize)> {
    let base = n / fold_count;
    let rem = n % fold_count;
    let mut folds = Vec::with_capacity(fold_count);
    let mut start = 0;
    for i in 0..fold_count {
        let size = base + usize::from(i < rem);
        folds.push((start, start + size));
        start += size;
    }
    folds
}
