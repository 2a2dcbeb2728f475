use std::collections::BTreeSet;

use proptest::prelude::*;
use svi_core::corpus::{
    generate_lda_corpus, load_uci_bow, split_heldout, write_uci_bow, Corpus, Document, SyntheticSpec, TestSet,
    Vocabulary,
};

fn document() -> impl Strategy<Value = Document> {
    prop::collection::vec((0usize..30, 1u32..6), 0..15).prop_map(|e| Document::from_counts(e).unwrap())
}

proptest! {
    #[test]
    fn splits_partition_unique_terms(
        doc in prop::collection::vec((0usize..50, 1u32..9), 2..25).prop_map(|e| Document::from_counts(e).unwrap()),
        fraction in 0.01f64..0.99,
        seed in any::<u64>(),
    ) {
        prop_assume!(doc.unique_terms() >= 2);
        let split = split_heldout(&doc, fraction, seed).unwrap();
        let obs: BTreeSet<usize> = split.observed.terms().collect();
        let ho: BTreeSet<usize> = split.heldout.terms().collect();
        let all: BTreeSet<usize> = doc.terms().collect();
        prop_assert!(obs.is_disjoint(&ho));
        prop_assert_eq!(obs.union(&ho).copied().collect::<BTreeSet<_>>(), all);
        prop_assert!(!obs.is_empty() && !ho.is_empty());
        prop_assert_eq!(split.observed.total() + split.heldout.total(), doc.total());
        prop_assert_eq!(split_heldout(&doc, fraction, seed).unwrap(), split);
    }

    #[test]
    fn uci_round_trip(docs in prop::collection::vec(document(), 1..12)) {
        let corpus = Corpus::new(Vocabulary::numbered(30), docs).unwrap();
        let mut docword = Vec::new();
        let mut vocab = Vec::new();
        write_uci_bow(&corpus, &mut docword, &mut vocab).unwrap();
        let (back, report) = load_uci_bow(docword.as_slice(), vocab.as_slice()).unwrap();
        prop_assert_eq!(&back, &corpus);
        let empty: Vec<usize> = (0..corpus.num_documents()).filter(|&d| corpus.document(d).is_empty()).collect();
        prop_assert_eq!(report.empty_documents, empty);
    }
}

#[test]
fn test_sets_count_unsplittable_documents() {
    let docs = vec![
        Document::from_counts([(0, 1), (1, 1), (2, 1), (3, 1)]).unwrap(),
        Document::from_counts([(4, 5)]).unwrap(),
        Document::empty(),
    ];
    let set = TestSet::from_documents(&docs, 0.5, 3).unwrap();
    assert_eq!(set.splits.len(), 1);
    assert_eq!(set.skipped, 2);
    assert_eq!(set.splits[0].heldout.total(), 2);
    assert_eq!(set.splits[0].observed.total(), 2);
}

fn spec(num_documents: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        num_topics: 3,
        num_terms: 25,
        num_documents,
        doc_length: 50,
        alpha: 0.5,
        eta: 0.2,
        seed,
    }
}

#[test]
fn synthetic_corpora_are_reproducible() {
    let (a, ta) = generate_lda_corpus(&spec(20, 5)).unwrap();
    let (b, tb) = generate_lda_corpus(&spec(20, 5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (c, _) = generate_lda_corpus(&spec(20, 6)).unwrap();
    assert_ne!(a, c);
    assert!(a.documents().iter().all(|d| d.total() == 50));
    for row in ta.topics.iter().chain(&ta.proportions) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_topic_corpora_use_one_topic() {
    let mut s = spec(10, 1);
    s.num_topics = 1;
    let (_, truth) = generate_lda_corpus(&s).unwrap();
    assert!(truth.proportions.iter().all(|p| p == &vec![1.0]));
}

/// Total-variation distance between the corpus term frequencies and the
/// mixture implied by the truth.
fn empirical_gap(num_documents: usize) -> f64 {
    let (corpus, truth) = generate_lda_corpus(&spec(num_documents, 77)).unwrap();
    let v = corpus.num_terms();
    let mut freq = vec![0.0; v];
    let mut expected = vec![0.0; v];
    for (doc, theta) in corpus.documents().iter().zip(&truth.proportions) {
        for &(t, c) in doc.counts() {
            freq[t] += f64::from(c);
        }
        for (k, w) in theta.iter().enumerate() {
            for (e, b) in expected.iter_mut().zip(&truth.topics[k]) {
                *e += w * b * doc.total() as f64;
            }
        }
    }
    let total = corpus.total_tokens() as f64;
    0.5 * freq.iter().zip(&expected).map(|(f, e)| (f - e).abs() / total).sum::<f64>()
}

#[test]
fn term_frequencies_approach_the_generating_mixture() {
    let gaps: Vec<f64> = [20, 200, 2000].into_iter().map(empirical_gap).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn tiny_eta_puts_topics_near_vertices() {
    let mut total = 0.0;
    let seeds = 1000;
    for seed in 0..seeds {
        let s = SyntheticSpec {
            num_topics: 2,
            num_terms: 2,
            num_documents: 1,
            doc_length: 1,
            alpha: 1.0,
            eta: 1e-3,
            seed,
        };
        let (_, truth) = generate_lda_corpus(&s).unwrap();
        total += truth.topics.iter().map(|t| t[0].max(t[1])).sum::<f64>() / 2.0;
    }
    assert!(total / seeds as f64 >= 0.95);
}
