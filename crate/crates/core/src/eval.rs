//! Held-out predictive log likelihood and topic-recovery diagnostics.
//!
//! Each test document is split into an observed and a held-out part. Local
//! parameters are fit on the observed part against the trained globals, and
//! every held-out token is scored under
//! `p(w) ≈ Σ_k E[θ_k] E[β_kw]`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, HeldoutSplit, TestSet};
use crate::engine::LocalControl;
use crate::error::{contract, Result};
use crate::hdp::{self, stick_weights, HdpConfig, HdpGlobalState};
use crate::lda::{self, LdaGlobalState};

const SIMPLEX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Average log probability over all held-out tokens.
    pub per_word_log_likelihood: f64,
    pub documents_evaluated: usize,
    pub documents_skipped: usize,
    pub heldout_tokens: u64,
    /// Iteration of the evaluated globals.
    pub iteration: u64,
    /// Left at zero here; callers that time their runs fill it in.
    pub wall_clock_seconds: f64,
}

fn check_simplex(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for v in values {
        if !(v >= -SIMPLEX_TOLERANCE) || !v.is_finite() {
            return Err(contract(format!("{what} has a negative or non-finite entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(contract(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// `p_v = Σ_k θ̄_k β̄_kv`.
pub fn predictive_distribution(expected_theta: &[f64], expected_beta: &Array2<f64>) -> Result<Vec<f64>> {
    if expected_theta.len() != expected_beta.nrows() {
        return Err(contract(format!(
            "{} topic weights for {} topics",
            expected_theta.len(),
            expected_beta.nrows()
        )));
    }
    check_simplex(expected_theta.iter().copied(), "topic weights")?;
    for (k, row) in expected_beta.outer_iter().enumerate() {
        check_simplex(row.iter().copied(), &format!("topic {k}"))?;
    }
    Ok(mix(expected_theta, expected_beta))
}

fn mix(theta: &[f64], beta: &Array2<f64>) -> Vec<f64> {
    let mut out = vec![0.0; beta.ncols()];
    for (&w, row) in theta.iter().zip(beta.outer_iter()) {
        out.iter_mut().zip(row.iter()).for_each(|(o, b)| *o += w * b);
    }
    out
}

/// Log likelihood of the held-out tokens under `θ̄`, with `β̄` already validated.
fn score(heldout: &Document, theta: &[f64], beta: &Array2<f64>) -> f64 {
    heldout
        .counts()
        .iter()
        .map(|&(v, count)| {
            let p: f64 = theta.iter().zip(beta.column(v)).map(|(t, b)| t * b).sum();
            f64::from(count) * p.ln()
        })
        .sum()
}

fn report<F>(test: &TestSet, num_terms: usize, iteration: u64, per_document: F) -> Result<EvalReport>
where
    F: Fn(&HeldoutSplit) -> Result<f64> + Sync,
{
    for split in &test.splits {
        let out_of_range = split.observed.terms().chain(split.heldout.terms()).any(|v| v >= num_terms);
        if out_of_range {
            return Err(contract("test document term outside the vocabulary"));
        }
    }
    let usable: Vec<&HeldoutSplit> = test
        .splits
        .iter()
        .filter(|s| !s.observed.is_empty() && !s.heldout.is_empty())
        .collect();
    let scores = usable.par_iter().map(|s| per_document(s)).collect::<Result<Vec<_>>>()?;
    let tokens: u64 = usable.iter().map(|s| s.heldout.total()).sum();
    let total: f64 = scores.iter().sum();
    let skipped = test.skipped + (test.splits.len() - usable.len());
    Ok(EvalReport {
        per_word_log_likelihood: if tokens == 0 { f64::NAN } else { total / tokens as f64 },
        documents_evaluated: usable.len(),
        documents_skipped: skipped,
        heldout_tokens: tokens,
        iteration,
        wall_clock_seconds: 0.0,
    })
}

/// Held-out predictive log likelihood of a trained LDA model.
pub fn evaluate_lda(state: &LdaGlobalState, alpha: f64, test: &TestSet, control: LocalControl) -> Result<EvalReport> {
    let elog_beta = lda::expected_log_beta(&state.lambda)?;
    let beta = state.expected_topics();
    report(test, state.num_terms(), state.t, |split| {
        let local = lda::local_step(&split.observed, &elog_beta, alpha, control)?;
        let total: f64 = local.gamma.iter().sum();
        let theta: Vec<f64> = local.gamma.iter().map(|g| g / total).collect();
        Ok(score(&split.heldout, &theta, &beta))
    })
}

/// Expected topic proportions of one document:
/// `θ̄_k = Σ_i w_i ζ_ik` with `w` the document stick weights at their
/// posterior means, renormalized over the `T` sticks.
pub fn hdp_expected_theta(local: &hdp::HdpLocalState) -> Vec<f64> {
    let mut w = stick_weights(local.gamma1.iter().zip(&local.gamma2).map(|(a, b)| a / (a + b)));
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let mut theta = vec![0.0; local.zeta.ncols()];
    for (wi, row) in w.iter().zip(local.zeta.outer_iter()) {
        theta.iter_mut().zip(row.iter()).for_each(|(t, z)| *t += wi * z);
    }
    theta
}

/// Held-out predictive log likelihood of a trained HDP.
pub fn evaluate_hdp(state: &HdpGlobalState, config: &HdpConfig, test: &TestSet, control: LocalControl) -> Result<EvalReport> {
    let elog_beta = lda::expected_log_beta(&state.lambda)?;
    let elog_sticks = hdp::expect_log_sticks(&state.stick_a, &state.stick_b)?;
    let beta = state.expected_topics();
    report(test, state.lambda.ncols(), state.t, |split| {
        let local = hdp::local_step(&split.observed, &elog_beta, &elog_sticks, config.alpha, config.doc_truncation, control)?;
        Ok(score(&split.heldout, &hdp_expected_theta(&local), &beta))
    })
}

/// Indices of the `m` most probable terms of a topic, most probable first;
/// ties go to the lower term index.
pub fn top_terms(row: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Minimum-cost assignment of every row to a distinct column
/// (rows ≤ columns), by the Hungarian method in O(n²m).
///
/// Returns the column assigned to each row.
pub fn min_cost_assignment(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let (n, m) = cost.dim();
    if n > m {
        return Err(contract(format!("cannot assign {n} rows to {m} columns")));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(contract("assignment costs must be finite"));
    }
    // potentials and matching are 1-based, with column 0 as the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    Ok(out)
}

/// Mean L1 distance between each true topic and the estimated topic it is
/// matched to under the best one-to-one assignment.
pub fn topic_recovery_distance(truth: &[Vec<f64>], estimated: &Array2<f64>) -> Result<f64> {
    if truth.is_empty() {
        return Err(contract("no reference topics"));
    }
    if truth.iter().any(|t| t.len() != estimated.ncols()) {
        return Err(contract("reference and estimated topics have different vocabularies"));
    }
    let cost = Array2::from_shape_fn((truth.len(), estimated.nrows()), |(i, j)| {
        truth[i].iter().zip(estimated.row(j)).map(|(a, b)| (a - b).abs()).sum::<f64>()
    });
    let assignment = min_cost_assignment(&cost)?;
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
    Ok(total / truth.len() as f64)
}
