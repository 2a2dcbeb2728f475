//! Bag-of-words corpora: loading, writing, held-out splitting, and synthetic
//! generation from the LDA generative process.
//!
//! The on-disk format is the UCI bag-of-words layout. A `docword` file starts
//! with three integers `D`, `W`, `NNZ` (one per line, or all on one line),
//! followed by `NNZ` lines `docID termID count` with 1-based IDs. The
//! companion vocabulary file holds one term per line.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::error::{contract, Error, Result};
use crate::random::{sample_symmetric_dirichlet, seeded_rng};

/// Ordered list of distinct terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(contract("vocabulary must contain at least one term"));
        }
        let mut seen = HashSet::with_capacity(terms.len());
        for t in &terms {
            if !seen.insert(t.as_str()) {
                return Err(contract(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Self { terms })
    }

    /// Synthetic vocabulary `w0000, w0001, ...`.
    pub fn numbered(size: usize) -> Self {
        let width = size.saturating_sub(1).to_string().len().max(4);
        Self {
            terms: (0..size).map(|i| format!("w{i:0width$}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// A document as sparse term counts, sorted by term index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    counts: Vec<(usize, u32)>,
    total: u64,
}

impl Document {
    /// Build from `(term, count)` pairs. Repeated terms are merged; zero
    /// counts are rejected.
    pub fn from_counts<I: IntoIterator<Item = (usize, u32)>>(entries: I) -> Result<Self> {
        let mut counts: Vec<(usize, u32)> = entries.into_iter().collect();
        if counts.iter().any(|&(_, c)| c == 0) {
            return Err(contract("document counts must be positive"));
        }
        counts.sort_unstable_by_key(|&(t, _)| t);
        let mut merged: Vec<(usize, u32)> = Vec::with_capacity(counts.len());
        for (t, c) in counts {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += c,
                _ => merged.push((t, c)),
            }
        }
        let total = merged.iter().map(|&(_, c)| u64::from(c)).sum();
        Ok(Self { counts: merged, total })
    }

    /// Build from a token sequence.
    pub fn from_tokens<I: IntoIterator<Item = usize>>(tokens: I) -> Self {
        Self::from_counts(tokens.into_iter().map(|t| (t, 1))).expect("unit counts")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `(term, count)` pairs in ascending term order.
    pub fn counts(&self) -> &[(usize, u32)] {
        &self.counts
    }

    pub fn terms(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().map(|&(t, _)| t)
    }

    /// Number of distinct terms.
    pub fn unique_terms(&self) -> usize {
        self.counts.len()
    }

    /// Word count N_d.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn max_term(&self) -> Option<usize> {
        self.counts.last().map(|&(t, _)| t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(vocabulary: Vocabulary, documents: Vec<Document>) -> Result<Self> {
        let v = vocabulary.len();
        for (d, doc) in documents.iter().enumerate() {
            if let Some(t) = doc.max_term() {
                if t >= v {
                    return Err(contract(format!(
                        "document {d} references term {t} outside a vocabulary of {v}"
                    )));
                }
            }
        }
        Ok(Self { vocabulary, documents })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, d: usize) -> &Document {
        &self.documents[d]
    }

    /// Number of documents, D.
    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    /// Vocabulary size, V.
    pub fn num_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.documents.iter().map(Document::total).sum()
    }

    /// Corpus over the same vocabulary restricted to `range` of documents.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Corpus {
        Corpus {
            vocabulary: self.vocabulary.clone(),
            documents: self.documents[range].to_vec(),
        }
    }
}

/// Side information gathered while loading a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Indices of documents with no tokens. They are kept in the corpus.
    pub empty_documents: Vec<usize>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Read a UCI bag-of-words corpus.
pub fn load_uci_bow<R1: BufRead, R2: BufRead>(docword: R1, vocab: R2) -> Result<(Corpus, LoadReport)> {
    let mut terms = Vec::new();
    for (i, line) in vocab.lines().enumerate() {
        let line = line?;
        let term = line.trim();
        if term.is_empty() {
            continue;
        }
        if term.split_whitespace().count() != 1 {
            return Err(parse_err(i + 1, format!("vocabulary term {term:?} contains whitespace")));
        }
        terms.push(term.to_string());
    }
    let vocabulary = Vocabulary::new(terms)?;

    let mut header: Vec<usize> = Vec::with_capacity(3);
    let mut per_doc: Vec<Vec<(usize, u32)>> = Vec::new();
    let mut entries = 0usize;
    let mut last_line = 0usize;
    let mut header_line = 0usize;
    for (i, line) in docword.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if header.len() < 3 {
            for f in fields {
                if header.len() == 3 {
                    return Err(parse_err(lineno, "trailing fields after the D W NNZ header"));
                }
                let n = f
                    .parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("invalid header value {f:?}")))?;
                header.push(n);
            }
            if header.len() == 3 {
                header_line = lineno;
                let (d, w) = (header[0], header[1]);
                if w != vocabulary.len() {
                    return Err(parse_err(
                        lineno,
                        format!("header declares W = {w} but the vocabulary has {} terms", vocabulary.len()),
                    ));
                }
                per_doc = vec![Vec::new(); d];
            }
            continue;
        }
        let (d, w, nnz) = (header[0], header[1], header[2]);
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected `docID termID count`, got {line:?}")));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<i64>()
                .map_err(|_| parse_err(lineno, format!("invalid {what} {s:?}")))
        };
        let doc_id = parse(fields[0], "docID")?;
        let term_id = parse(fields[1], "termID")?;
        let count = parse(fields[2], "count")?;
        if doc_id < 1 || doc_id as usize > d {
            return Err(parse_err(lineno, format!("docID {doc_id} outside 1..={d}")));
        }
        if term_id < 1 || term_id as usize > w {
            return Err(parse_err(lineno, format!("termID {term_id} outside 1..={w}")));
        }
        if count <= 0 || count > i64::from(u32::MAX) {
            return Err(parse_err(lineno, format!("count must be a positive integer, got {count}")));
        }
        entries += 1;
        if entries > nnz {
            return Err(parse_err(lineno, format!("more entries than the declared NNZ = {nnz}")));
        }
        per_doc[doc_id as usize - 1].push((term_id as usize - 1, count as u32));
    }
    if header.len() < 3 {
        return Err(parse_err(last_line.max(1), "missing D W NNZ header"));
    }
    if entries != header[2] {
        return Err(parse_err(
            last_line.max(header_line),
            format!("declared NNZ = {} but found {entries} entries", header[2]),
        ));
    }

    let mut report = LoadReport::default();
    let mut documents = Vec::with_capacity(per_doc.len());
    for (d, entries) in per_doc.into_iter().enumerate() {
        let doc = Document::from_counts(entries)?;
        if doc.is_empty() {
            report.empty_documents.push(d);
        }
        documents.push(doc);
    }
    Ok((Corpus::new(vocabulary, documents)?, report))
}

/// Write a corpus in UCI bag-of-words format.
pub fn write_uci_bow<W1: Write, W2: Write>(corpus: &Corpus, mut docword: W1, mut vocab: W2) -> Result<()> {
    let nnz: usize = corpus.documents.iter().map(Document::unique_terms).sum();
    writeln!(docword, "{}", corpus.num_documents())?;
    writeln!(docword, "{}", corpus.num_terms())?;
    writeln!(docword, "{nnz}")?;
    for (d, doc) in corpus.documents.iter().enumerate() {
        for &(t, c) in doc.counts() {
            writeln!(docword, "{} {} {}", d + 1, t + 1, c)?;
        }
    }
    for term in corpus.vocabulary.terms() {
        writeln!(vocab, "{term}")?;
    }
    docword.flush()?;
    vocab.flush()?;
    Ok(())
}

/// A test document divided into disjoint sets of unique terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldoutSplit {
    pub observed: Document,
    pub heldout: Document,
}

/// Split a document by unique term: a seeded shuffle of its unique terms
/// sends the first `⌈fraction · U⌉` (capped at `U − 1`) to the held-out part.
pub fn split_heldout(doc: &Document, heldout_fraction: f64, seed: u64) -> Result<HeldoutSplit> {
    if !(heldout_fraction > 0.0 && heldout_fraction < 1.0) {
        return Err(Error::Split(format!("held-out fraction {heldout_fraction} outside (0, 1)")));
    }
    let unique = doc.unique_terms();
    if unique < 2 {
        return Err(Error::Split(format!("document has {unique} unique terms, need at least 2")));
    }
    let mut order: Vec<usize> = (0..unique).collect();
    order.shuffle(&mut seeded_rng(seed, 0));
    let n_heldout = ((heldout_fraction * unique as f64).ceil() as usize).clamp(1, unique - 1);
    let pick = |idx: &[usize]| Document::from_counts(idx.iter().map(|&i| doc.counts()[i]));
    Ok(HeldoutSplit {
        heldout: pick(&order[..n_heldout])?,
        observed: pick(&order[n_heldout..])?,
    })
}

/// Held-out splits for a test corpus, with the count of unsplittable documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub splits: Vec<HeldoutSplit>,
    /// Documents with fewer than two unique terms.
    pub skipped: usize,
}

impl TestSet {
    /// Split every document; document `d` uses seed `seed + d`.
    pub fn from_documents(docs: &[Document], heldout_fraction: f64, seed: u64) -> Result<Self> {
        let mut splits = Vec::with_capacity(docs.len());
        let mut skipped = 0;
        for (d, doc) in docs.iter().enumerate() {
            match split_heldout(doc, heldout_fraction, seed.wrapping_add(d as u64)) {
                Ok(s) => splits.push(s),
                Err(Error::Split(_)) if doc.unique_terms() < 2 => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(Self { splits, skipped })
    }

    pub fn len(&self) -> usize {
        self.splits.len() + self.skipped
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ground truth behind a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    /// K rows over V terms.
    pub topics: Vec<Vec<f64>>,
    /// D rows over K topics.
    pub proportions: Vec<Vec<f64>>,
}

/// Sizes and priors of a synthetic LDA corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub num_topics: usize,
    pub num_terms: usize,
    pub num_documents: usize,
    pub doc_length: usize,
    pub alpha: f64,
    pub eta: f64,
    pub seed: u64,
}

/// Sample a corpus from the LDA generative process: topics from
/// Dirichlet(η), per-document proportions from Dirichlet(α), then for each
/// token a topic assignment followed by a word from that topic.
pub fn generate_lda_corpus(spec: &SyntheticSpec) -> Result<(Corpus, SyntheticTruth)> {
    let SyntheticSpec { num_topics: k, num_terms: v, num_documents: d, doc_length, alpha, eta, seed } = *spec;
    if k == 0 || v == 0 || d == 0 || doc_length == 0 {
        return Err(contract("synthetic corpus sizes must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite() && eta > 0.0 && eta.is_finite()) {
        return Err(contract("synthetic corpus priors must be positive"));
    }
    let mut rng = seeded_rng(seed, 0);
    let topics: Vec<Vec<f64>> = (0..k).map(|_| sample_symmetric_dirichlet(&mut rng, v, eta)).collect();
    let word_dists: Vec<WeightedIndex<f64>> = topics
        .iter()
        .map(|t| WeightedIndex::new(t).map_err(|e| contract(format!("degenerate topic: {e}"))))
        .collect::<Result<_>>()?;
    let mut proportions = Vec::with_capacity(d);
    let mut documents = Vec::with_capacity(d);
    for _ in 0..d {
        let theta = if k == 1 { vec![1.0] } else { sample_symmetric_dirichlet(&mut rng, k, alpha) };
        let topic_dist =
            WeightedIndex::new(&theta).map_err(|e| contract(format!("degenerate proportions: {e}")))?;
        let tokens: Vec<usize> = (0..doc_length)
            .map(|_| {
                let z = topic_dist.sample(&mut rng);
                word_dists[z].sample(&mut rng)
            })
            .collect();
        documents.push(Document::from_tokens(tokens));
        proportions.push(theta);
    }
    let corpus = Corpus::new(Vocabulary::numbered(v), documents)?;
    Ok((corpus, SyntheticTruth { topics, proportions }))
}

/// Headered CSV of a row-stochastic matrix, 17 significant digits per entry.
pub fn write_matrix_csv<W: Write>(mut out: W, row_label: &str, column_labels: &[String], rows: &[Vec<f64>]) -> Result<()> {
    write!(out, "{row_label}")?;
    for c in column_labels {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for (i, row) in rows.iter().enumerate() {
        write!(out, "{i}")?;
        for x in row {
            write!(out, ",{x:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
