//! Held-out evaluation against a second, deliberately naive implementation
//! of the same pipeline.

use ndarray::Array2;
use svi_core::corpus::{generate_lda_corpus, Corpus, Document, HeldoutSplit, SyntheticSpec, TestSet};
use svi_core::engine::{run_svi, LocalControl, Progress, StepSchedule, SviConfig, SviState};
use svi_core::eval::{evaluate_hdp, evaluate_lda, predictive_distribution};
use svi_core::expfam::digamma;
use svi_core::hdp::{Hdp, HdpConfig, HdpGlobalState};
use svi_core::lda::{Lda, LdaConfig, LdaGlobalState};

const CONTROL: LocalControl = LocalControl { tolerance: 1e-9, max_sweeps: 300 };

fn tiny_corpus() -> (Corpus, TestSet) {
    let spec = SyntheticSpec {
        num_topics: 3,
        num_terms: 12,
        num_documents: 8,
        doc_length: 25,
        alpha: 0.4,
        eta: 0.2,
        seed: 31,
    };
    let (all, _) = generate_lda_corpus(&spec).unwrap();
    let train = all.slice(0..3);
    let test = TestSet::from_documents(&all.documents()[3..], 0.5, 1).unwrap();
    (train, test)
}

fn train_config() -> SviConfig {
    SviConfig {
        schedule: StepSchedule::new(1.0, 0.8).unwrap(),
        minibatch_size: 2,
        max_iterations: 10,
        local_tolerance: 1e-6,
        local_max_sweeps: 100,
        seed: 4,
        sample_with_replacement: false,
    }
}

fn no_op<M: svi_core::engine::ConjugateModel>(_: &Progress<'_, M>) -> svi_core::Result<()> {
    Ok(())
}

fn psi(x: f64) -> f64 {
    digamma(x).unwrap()
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn elog_rows(lambda: &Array2<f64>) -> Vec<Vec<f64>> {
    lambda
        .outer_iter()
        .map(|r| {
            let s: f64 = r.sum();
            r.iter().map(|x| psi(*x) - psi(s)).collect()
        })
        .collect()
}

fn beta_bar(lambda: &Array2<f64>) -> Vec<Vec<f64>> {
    lambda.outer_iter().map(|r| r.iter().map(|x| x / r.sum()).collect()).collect()
}

fn score(split: &HeldoutSplit, theta: &[f64], beta: &[Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for &(v, c) in split.heldout.counts() {
        let mut p = 0.0;
        for k in 0..theta.len() {
            p += theta[k] * beta[k][v];
        }
        ll += c as f64 * p.ln();
    }
    ll
}

fn naive_lda(lambda: &Array2<f64>, alpha: f64, test: &TestSet) -> f64 {
    let elog = elog_rows(lambda);
    let beta = beta_bar(lambda);
    let k = lambda.nrows();
    let (mut total, mut tokens) = (0.0, 0.0);
    for split in &test.splits {
        let doc = &split.observed;
        let mut gamma = vec![1.0; k];
        for _ in 0..CONTROL.max_sweeps {
            let gs: f64 = gamma.iter().sum();
            let mut next = vec![alpha; k];
            for &(v, c) in doc.counts() {
                let phi = softmax(&(0..k).map(|j| psi(gamma[j]) - psi(gs) + elog[j][v]).collect::<Vec<_>>());
                for j in 0..k {
                    next[j] += c as f64 * phi[j];
                }
            }
            let change: f64 = (0..k).map(|j| (next[j] - gamma[j]).abs()).sum::<f64>() / k as f64;
            gamma = next;
            if change <= CONTROL.tolerance {
                break;
            }
        }
        let gs: f64 = gamma.iter().sum();
        let theta: Vec<f64> = gamma.iter().map(|g| g / gs).collect();
        total += score(split, &theta, &beta);
        tokens += split.heldout.total() as f64;
    }
    total / tokens
}

fn naive_sticks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..a.len() {
        let mut e = psi(a[k]) - psi(a[k] + b[k]);
        for l in 0..k {
            e += psi(b[l]) - psi(a[l] + b[l]);
        }
        out.push(e);
    }
    out
}

fn naive_hdp(state: &HdpGlobalState, config: &HdpConfig, test: &TestSet) -> f64 {
    let elog = elog_rows(&state.lambda);
    let beta = beta_bar(&state.lambda);
    let sticks = naive_sticks(&state.stick_a, &state.stick_b);
    let (k, t, alpha) = (config.num_topics, config.doc_truncation, config.alpha);
    let (mut total, mut tokens) = (0.0, 0.0);
    for split in &test.splits {
        let doc: Vec<(usize, f64)> = split.observed.counts().iter().map(|&(v, c)| (v, c as f64)).collect();
        let init = softmax(&(0..k).map(|j| doc.iter().map(|(v, c)| c * elog[j][*v]).sum()).collect::<Vec<f64>>());
        let mut zeta = vec![init; t];
        let mut phi: Vec<Vec<f64>> = doc
            .iter()
            .map(|(v, _)| softmax(&(0..t).map(|i| (0..k).map(|j| zeta[i][j] * elog[j][*v]).sum()).collect::<Vec<f64>>()))
            .collect();
        let sticks_of = |phi: &Vec<Vec<f64>>| {
            let g1: Vec<f64> = (0..t).map(|i| 1.0 + doc.iter().zip(phi).map(|((_, c), p)| c * p[i]).sum::<f64>()).collect();
            let g2: Vec<f64> = (0..t)
                .map(|i| alpha + doc.iter().zip(phi).map(|((_, c), p)| c * p[i + 1..].iter().sum::<f64>()).sum::<f64>())
                .collect();
            (g1, g2)
        };
        let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..CONTROL.max_sweeps {
            let (g1, g2) = sticks_of(&phi);
            zeta = (0..t)
                .map(|i| {
                    softmax(
                        &(0..k)
                            .map(|j| sticks[j] + doc.iter().zip(&phi).map(|((v, c), p)| c * p[i] * elog[j][*v]).sum::<f64>())
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let epi = naive_sticks(&g1, &g2);
            phi = doc
                .iter()
                .map(|(v, _)| softmax(&(0..t).map(|i| epi[i] + (0..k).map(|j| zeta[i][j] * elog[j][*v]).sum::<f64>()).collect::<Vec<_>>()))
                .collect();
            let done = previous.as_ref().is_some_and(|(p1, p2)| {
                let diff: f64 = (0..t).map(|i| (p1[i] - g1[i]).abs() + (p2[i] - g2[i]).abs()).sum();
                diff / (2 * t) as f64 <= CONTROL.tolerance
            });
            previous = Some((g1, g2));
            if done {
                break;
            }
        }
        let (g1, g2) = sticks_of(&phi);
        let mut w = Vec::new();
        let mut rest = 1.0;
        for i in 0..t {
            let v = g1[i] / (g1[i] + g2[i]);
            w.push(v * rest);
            rest *= 1.0 - v;
        }
        let ws: f64 = w.iter().sum();
        let theta: Vec<f64> = (0..k).map(|j| (0..t).map(|i| w[i] / ws * zeta[i][j]).sum()).collect();
        total += score(split, &theta, &beta);
        tokens += split.heldout.total() as f64;
    }
    total / tokens
}

#[test]
fn lda_evaluation_matches_a_naive_pipeline() {
    let (train, test) = tiny_corpus();
    let config = LdaConfig::new(3, 0.4, 0.2).unwrap();
    let model = Lda::new(config, 12);
    let state = SviState::new(model.initial_globals(3, 2).unwrap(), 2);
    let run = run_svi(&model, &train, &train_config(), state, &mut no_op::<Lda>).unwrap();
    let trained = LdaGlobalState::from_global_state(&run.state.globals, 3, run.state.iteration).unwrap();
    let before = trained.clone();
    let report = evaluate_lda(&trained, config.alpha, &test, CONTROL).unwrap();
    assert_eq!(trained, before);
    let naive = naive_lda(&trained.lambda, config.alpha, &test);
    assert!((report.per_word_log_likelihood - naive).abs() < 1e-10, "{} vs {naive}", report.per_word_log_likelihood);
    assert!(report.per_word_log_likelihood < 0.0);
    assert_eq!(report.documents_evaluated + report.documents_skipped, 5);
    assert_eq!(report.iteration, 10);
}

#[test]
fn hdp_evaluation_matches_a_naive_pipeline() {
    let (train, test) = tiny_corpus();
    let config = HdpConfig::new(5, 3, 1.0, 1.0, 0.2).unwrap();
    let model = Hdp::new(config, 12);
    let state = SviState::new(model.initial_globals(3, 6).unwrap(), 6);
    let run = run_svi(&model, &train, &train_config(), state, &mut no_op::<Hdp>).unwrap();
    let trained = model.state(&run.state.globals, run.state.iteration).unwrap();
    let report = evaluate_hdp(&trained, &config, &test, CONTROL).unwrap();
    let naive = naive_hdp(&trained, &config, &test);
    assert!((report.per_word_log_likelihood - naive).abs() < 1e-10, "{} vs {naive}", report.per_word_log_likelihood);
}

#[test]
fn single_topic_scores_its_own_probabilities() {
    let lambda = Array2::from_shape_vec((1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let state = LdaGlobalState { lambda, t: 0 };
    let split = HeldoutSplit {
        observed: Document::from_counts([(0, 2)]).unwrap(),
        heldout: Document::from_counts([(2, 1), (3, 3)]).unwrap(),
    };
    let test = TestSet { splits: vec![split], skipped: 0 };
    let report = evaluate_lda(&state, 0.5, &test, CONTROL).unwrap();
    let want = (0.3f64.ln() + 3.0 * 0.4f64.ln()) / 4.0;
    assert!((report.per_word_log_likelihood - want).abs() < 1e-14);
}

#[test]
fn uniform_topics_score_minus_log_v() {
    let (_, test) = tiny_corpus();
    let lda = LdaGlobalState { lambda: Array2::from_elem((3, 12), 2.5), t: 0 };
    let r = evaluate_lda(&lda, 0.3, &test, CONTROL).unwrap();
    assert!((r.per_word_log_likelihood + 12f64.ln()).abs() < 1e-12);
    let config = HdpConfig::new(4, 2, 1.0, 1.0, 0.1).unwrap();
    let hdp = HdpGlobalState {
        lambda: Array2::from_elem((4, 12), 0.7),
        stick_a: vec![1.0; 4],
        stick_b: vec![2.0; 4],
        t: 0,
    };
    let r = evaluate_hdp(&hdp, &config, &test, CONTROL).unwrap();
    assert!((r.per_word_log_likelihood + 12f64.ln()).abs() < 1e-12);
}

#[test]
fn single_stick_documents_use_their_pointer_row() {
    let config = HdpConfig::new(3, 1, 1.0, 1.0, 0.1).unwrap();
    let lambda = Array2::from_shape_vec((3, 3), vec![5.0, 1.0, 1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 5.0]).unwrap();
    let state = HdpGlobalState { lambda: lambda.clone(), stick_a: vec![1.0; 3], stick_b: vec![1.0; 3], t: 0 };
    let observed = Document::from_counts([(0, 3)]).unwrap();
    let split = HeldoutSplit { observed: observed.clone(), heldout: Document::from_counts([(1, 1)]).unwrap() };
    let report = evaluate_hdp(&state, &config, &TestSet { splits: vec![split], skipped: 0 }, CONTROL).unwrap();

    let elog = svi_core::lda::expected_log_beta(&lambda).unwrap();
    let sticks = svi_core::hdp::expect_log_sticks(&[1.0; 3], &[1.0; 3]).unwrap();
    let local = svi_core::hdp::local_step(&observed, &elog, &sticks, 1.0, 1, CONTROL).unwrap();
    let beta = state.expected_topics();
    let p = predictive_distribution(local.zeta.row(0).as_slice().unwrap(), &beta).unwrap();
    assert!((report.per_word_log_likelihood - p[1].ln()).abs() < 1e-14);
}

#[test]
fn duplicating_held_out_counts_leaves_the_average_unchanged() {
    let (train, test) = tiny_corpus();
    let lambda = svi_core::lda::init_lambda(3, 12, train.num_documents(), 0.2, 5).unwrap();
    let doubled = TestSet {
        splits: test
            .splits
            .iter()
            .map(|s| HeldoutSplit {
                observed: s.observed.clone(),
                heldout: Document::from_counts(s.heldout.counts().iter().map(|&(v, c)| (v, 2 * c))).unwrap(),
            })
            .collect(),
        skipped: test.skipped,
    };
    let a = evaluate_lda(&lambda, 0.4, &test, CONTROL).unwrap();
    let b = evaluate_lda(&lambda, 0.4, &doubled, CONTROL).unwrap();
    assert_eq!(a.per_word_log_likelihood, b.per_word_log_likelihood);
    assert_eq!(b.heldout_tokens, 2 * a.heldout_tokens);
}
