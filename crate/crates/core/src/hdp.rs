//! The hierarchical Dirichlet process topic model, truncated at `K` corpus
//! topics and `T` document-level sticks.
//!
//! Corpus sticks `V_k ~ Beta(1, ω)` have variational parameters `(a_k, b_k)`.
//! Each document draws sticks `π_di ~ Beta(1, α)` with parameters
//! `(γ1_i, γ2_i)`, topic pointers `c_di` with distributions `ζ_i` over the
//! corpus topics, and per-term assignments `φ_v` over its `T` sticks.
//!
//! Global blocks: `lambda[0]`…`lambda[K-1]`, then `stick_a` and `stick_b`.

use ndarray::{Array2, Axis};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::engine::{ConjugateModel, GlobalBlock, GlobalState, LocalControl};
use crate::error::{contract, domain, Result};
use crate::expfam::{psi, softmax_in_place};
use crate::lda::{expected_log_beta, lambda_from_blocks, lambda_to_blocks, random_topics, row_normalize};

pub const STICK_A: &str = "stick_a";
pub const STICK_B: &str = "stick_b";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdpConfig {
    /// Corpus-level truncation K.
    pub num_topics: usize,
    /// Document-level truncation T.
    pub doc_truncation: usize,
    pub alpha: f64,
    pub omega: f64,
    pub eta: f64,
}

impl HdpConfig {
    pub fn new(num_topics: usize, doc_truncation: usize, alpha: f64, omega: f64, eta: f64) -> Result<Self> {
        if num_topics == 0 || doc_truncation == 0 {
            return Err(contract("truncation levels must be positive"));
        }
        if doc_truncation > num_topics {
            return Err(contract(format!(
                "document truncation {doc_truncation} exceeds corpus truncation {num_topics}"
            )));
        }
        for (name, v) in [("alpha", alpha), ("omega", omega), ("eta", eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { num_topics, doc_truncation, alpha, omega, eta })
    }
}

impl Default for HdpConfig {
    fn default() -> Self {
        Self { num_topics: 300, doc_truncation: 20, alpha: 1.0, omega: 1.0, eta: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdpGlobalState {
    /// K × V topic Dirichlet parameters.
    pub lambda: Array2<f64>,
    pub stick_a: Vec<f64>,
    pub stick_b: Vec<f64>,
    pub t: u64,
}

impl HdpGlobalState {
    /// Random topics as for LDA and the corpus sticks at their prior, `(1, ω)`.
    pub fn init(config: &HdpConfig, num_terms: usize, num_documents: usize, seed: u64) -> Result<Self> {
        if num_terms == 0 || num_documents == 0 {
            return Err(contract("initialization needs a non-empty vocabulary and corpus"));
        }
        let k = config.num_topics;
        Ok(Self {
            lambda: random_topics(k, num_terms, num_documents, config.eta, seed),
            stick_a: vec![1.0; k],
            stick_b: vec![config.omega; k],
            t: 0,
        })
    }

    pub fn to_global_state(&self) -> GlobalState {
        let mut blocks = lambda_to_blocks(&self.lambda);
        blocks.push(GlobalBlock::new(STICK_A, self.stick_a.clone()));
        blocks.push(GlobalBlock::new(STICK_B, self.stick_b.clone()));
        GlobalState::new(blocks)
    }

    pub fn from_global_state(globals: &GlobalState, num_topics: usize, t: u64) -> Result<Self> {
        let lambda = lambda_from_blocks(&globals.blocks, num_topics)?;
        let stick = |name: &str| -> Result<Vec<f64>> {
            let block = globals
                .block(name)
                .ok_or_else(|| contract(format!("missing block {name}")))?;
            if block.params.len() != num_topics {
                return Err(contract(format!("block {name} has {} entries", block.params.len())));
            }
            Ok(block.params.clone())
        };
        Ok(Self { lambda, stick_a: stick(STICK_A)?, stick_b: stick(STICK_B)?, t })
    }

    pub fn num_topics(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn expected_topics(&self) -> Array2<f64> {
        row_normalize(&self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdpLocalState {
    /// T × K topic pointer distributions.
    pub zeta: Array2<f64>,
    /// U × T stick assignments, one row per unique term.
    pub phi: Array2<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub empty: bool,
}

/// `E[log σ_k(V)] = E[log V_k] + Σ_{ℓ<k} E[log(1 − V_ℓ)]` for `V_k ~ Beta(a_k, b_k)`.
pub fn expect_log_sticks(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(contract(format!("{} first and {} second shape parameters", a.len(), b.len())));
    }
    if let Some(bad) = a.iter().chain(b).find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(domain(format!("stick parameters must be positive, got {bad}")));
    }
    Ok(log_sticks(a, b))
}

fn log_sticks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut prefix = 0.0;
    a.iter()
        .zip(b)
        .map(|(&ak, &bk)| {
            let s = psi(ak + bk);
            let out = psi(ak) - s + prefix;
            prefix += psi(bk) - s;
            out
        })
        .collect()
}

/// `γ1_i = 1 + Σ_v count_v φ_vi`, `γ2_i = α + Σ_v count_v Σ_{j>i} φ_vj`.
fn document_sticks(doc: &Document, phi: &Array2<f64>, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let t = phi.ncols();
    let mut mass = vec![0.0; t];
    for (&(_, count), row) in doc.counts().iter().zip(phi.outer_iter()) {
        let c = f64::from(count);
        for (m, p) in mass.iter_mut().zip(row.iter()) {
            *m += c * p;
        }
    }
    let gamma1 = mass.iter().map(|m| 1.0 + m).collect();
    let mut gamma2 = vec![alpha; t];
    let mut tail = 0.0;
    for i in (0..t).rev() {
        gamma2[i] += tail;
        tail += mass[i];
    }
    (gamma1, gamma2)
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.outer_iter_mut() {
        softmax_in_place(row.as_slice_mut().expect("contiguous row"));
    }
}

/// Fit one document's sticks, topic pointers and assignments against fixed
/// topic and corpus-stick expectations.
///
/// Initialization uses the likelihood only: every ζ row starts at
/// `∝ exp{Σ_v count_v E[log β_kv]}` and φ at `∝ exp{Σ_k ζ_ik E[log β_kv]}`.
/// Each sweep then updates γ from φ, ζ, and φ in that order, until the mean
/// absolute change of (γ1, γ2) between sweeps is at most the tolerance.
/// The returned γ is recomputed from the returned φ.
pub fn local_step(
    doc: &Document,
    elog_beta: &Array2<f64>,
    elog_sticks: &[f64],
    alpha: f64,
    doc_truncation: usize,
    control: LocalControl,
) -> Result<HdpLocalState> {
    let k = elog_beta.nrows();
    let t = doc_truncation;
    if k == 0 || t == 0 {
        return Err(contract("truncation levels must be positive"));
    }
    if elog_sticks.len() != k {
        return Err(contract(format!("{} stick expectations for {k} topics", elog_sticks.len())));
    }
    if doc.terms().last().is_some_and(|v| v >= elog_beta.ncols()) {
        return Err(contract("document term outside the vocabulary"));
    }

    if doc.is_empty() {
        let mut zeta = Array2::zeros((t, k));
        for mut row in zeta.outer_iter_mut() {
            row.iter_mut().zip(elog_sticks).for_each(|(z, e)| *z = *e);
        }
        softmax_rows(&mut zeta);
        return Ok(HdpLocalState {
            zeta,
            phi: Array2::zeros((0, t)),
            gamma1: vec![1.0; t],
            gamma2: vec![alpha; t],
            sweeps: 0,
            converged: true,
            empty: true,
        });
    }

    let u = doc.unique_terms();
    let counts: Vec<f64> = doc.counts().iter().map(|&(_, c)| f64::from(c)).collect();
    // U × K slice of E[log β] at the document's terms
    let mut term_elog = Array2::zeros((u, k));
    for (mut row, v) in term_elog.outer_iter_mut().zip(doc.terms()) {
        row.assign(&elog_beta.column(v));
    }

    let mut zeta = Array2::zeros((t, k));
    {
        let mut init = vec![0.0; k];
        for (row, c) in term_elog.outer_iter().zip(&counts) {
            init.iter_mut().zip(row.iter()).for_each(|(s, e)| *s += c * e);
        }
        softmax_in_place(&mut init);
        for mut row in zeta.outer_iter_mut() {
            row.iter_mut().zip(&init).for_each(|(z, v)| *z = *v);
        }
    }
    let mut phi = term_elog.dot(&zeta.t());
    softmax_rows(&mut phi);

    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < control.max_sweeps {
        sweeps += 1;
        let (gamma1, gamma2) = document_sticks(doc, &phi, alpha);

        // ζ_ik ∝ exp{E[log σ_k(V)] + Σ_v count_v φ_vi E[log β_kv]}
        let mut weighted = phi.clone();
        for (mut row, c) in weighted.outer_iter_mut().zip(&counts) {
            row.mapv_inplace(|p| p * c);
        }
        zeta = weighted.t().dot(&term_elog);
        for mut row in zeta.outer_iter_mut() {
            row.iter_mut().zip(elog_sticks).for_each(|(z, e)| *z += e);
        }
        softmax_rows(&mut zeta);

        // φ_vi ∝ exp{E[log σ_i(π)] + Σ_k ζ_ik E[log β_kv]}
        let elog_pi = log_sticks(&gamma1, &gamma2);
        phi = term_elog.dot(&zeta.t());
        for mut row in phi.outer_iter_mut() {
            row.iter_mut().zip(&elog_pi).for_each(|(p, e)| *p += e);
        }
        softmax_rows(&mut phi);

        let change = previous.as_ref().map(|(g1, g2)| {
            let diff: f64 = g1
                .iter()
                .zip(&gamma1)
                .chain(g2.iter().zip(&gamma2))
                .map(|(x, y)| (x - y).abs())
                .sum();
            diff / (2 * t) as f64
        });
        previous = Some((gamma1, gamma2));
        if change.is_some_and(|c| c <= control.tolerance) {
            converged = true;
            break;
        }
    }
    let (gamma1, gamma2) = document_sticks(doc, &phi, alpha);
    Ok(HdpLocalState { zeta, phi, gamma1, gamma2, sweeps, converged, empty: false })
}

/// Intermediate globals for a corpus of `num_documents` copies of `doc`.
#[derive(Debug, Clone, PartialEq)]
pub struct HdpIntermediates {
    pub lambda: Array2<f64>,
    pub stick_a: Vec<f64>,
    pub stick_b: Vec<f64>,
}

fn check_local(doc: &Document, local: &HdpLocalState) -> Result<()> {
    if local.phi.nrows() != doc.unique_terms() {
        return Err(contract(format!(
            "phi has {} rows for a document with {} unique terms",
            local.phi.nrows(),
            doc.unique_terms()
        )));
    }
    if local.phi.ncols() != local.zeta.nrows() {
        return Err(contract("phi and zeta disagree on the document truncation"));
    }
    Ok(())
}

/// Add `scale` times one document's expected sufficient statistics.
fn add_statistics(doc: &Document, local: &HdpLocalState, scale: f64, out: &mut HdpIntermediates) {
    let k = local.zeta.ncols();
    // U × K expected topic assignment of each term
    let assign = local.phi.dot(&local.zeta);
    for (&(v, count), row) in doc.counts().iter().zip(assign.outer_iter()) {
        let c = scale * f64::from(count);
        for (kk, p) in row.iter().enumerate() {
            out.lambda[[kk, v]] += c * p;
        }
    }
    let usage = local.zeta.sum_axis(Axis(0));
    let mut tail = 0.0;
    for kk in (0..k).rev() {
        out.stick_a[kk] += scale * usage[kk];
        out.stick_b[kk] += scale * tail;
        tail += usage[kk];
    }
}

fn prior_intermediates(k: usize, num_terms: usize, config: &HdpConfig) -> HdpIntermediates {
    HdpIntermediates {
        lambda: Array2::from_elem((k, num_terms), config.eta),
        stick_a: vec![1.0; k],
        stick_b: vec![config.omega; k],
    }
}

/// `λ̂_kv = η + D Σ_i ζ_ik Σ_v φ_vi count_v`, `â_k = 1 + D Σ_i ζ_ik`,
/// `b̂_k = ω + D Σ_i Σ_{ℓ>k} ζ_iℓ`.
pub fn intermediate_globals(
    doc: &Document,
    local: &HdpLocalState,
    config: &HdpConfig,
    num_terms: usize,
    num_documents: usize,
) -> Result<HdpIntermediates> {
    check_local(doc, local)?;
    if doc.terms().last().is_some_and(|v| v >= num_terms) {
        return Err(contract("document term outside the vocabulary"));
    }
    let mut out = prior_intermediates(local.zeta.ncols(), num_terms, config);
    add_statistics(doc, local, num_documents as f64, &mut out);
    Ok(out)
}

/// Coordinate updates of λ, a and b given locals for every document.
pub fn batch_globals(corpus: &Corpus, locals: &[HdpLocalState], config: &HdpConfig) -> Result<HdpIntermediates> {
    if locals.len() != corpus.num_documents() {
        return Err(contract(format!(
            "{} local states for {} documents",
            locals.len(),
            corpus.num_documents()
        )));
    }
    let k = config.num_topics;
    let mut out = prior_intermediates(k, corpus.num_terms(), config);
    for (doc, local) in corpus.documents().iter().zip(locals) {
        check_local(doc, local)?;
        if local.zeta.ncols() != k {
            return Err(contract("local state has the wrong number of topics"));
        }
        add_statistics(doc, local, 1.0, &mut out);
    }
    Ok(out)
}

impl HdpIntermediates {
    pub fn to_blocks(&self) -> Vec<GlobalBlock> {
        let mut blocks = lambda_to_blocks(&self.lambda);
        blocks.push(GlobalBlock::new(STICK_A, self.stick_a.clone()));
        blocks.push(GlobalBlock::new(STICK_B, self.stick_b.clone()));
        blocks
    }
}

/// Blend λ, a and b with their intermediates using the same ρ.
pub fn apply_global_step(state: &HdpGlobalState, intermediates: &HdpIntermediates, rho: f64) -> Result<HdpGlobalState> {
    if state.lambda.dim() != intermediates.lambda.dim() {
        return Err(contract("topic matrices differ in shape"));
    }
    let blocks = crate::engine::blocked_svi_step(&state.to_global_state().blocks, &intermediates.to_blocks(), rho)?;
    HdpGlobalState::from_global_state(&GlobalState::new(blocks), state.num_topics(), state.t + 1)
}

/// Stick weights `σ_k(V̄)` at the posterior means `V̄_k = a_k / (a_k + b_k)`.
pub fn expected_topic_weights(stick_a: &[f64], stick_b: &[f64]) -> Vec<f64> {
    stick_weights(stick_a.iter().zip(stick_b).map(|(a, b)| a / (a + b)))
}

pub(crate) fn stick_weights<I: IntoIterator<Item = f64>>(proportions: I) -> Vec<f64> {
    let mut rest = 1.0;
    proportions
        .into_iter()
        .map(|v| {
            let w = v * rest;
            rest *= 1.0 - v;
            w
        })
        .collect()
}

/// Expected number of tokens assigned to each corpus topic,
/// `Σ_d Σ_i ζ_dik Σ_v count_v φ_vi`.
pub fn topic_token_mass(locals: &[HdpLocalState]) -> Vec<f64> {
    let k = locals.first().map_or(0, |l| l.zeta.ncols());
    let mut out = vec![0.0; k];
    for local in locals {
        for (row, g1) in local.zeta.outer_iter().zip(&local.gamma1) {
            let mass = g1 - 1.0;
            out.iter_mut().zip(row.iter()).for_each(|(o, z)| *o += mass * z);
        }
    }
    out
}

/// Number of topics whose expected token mass exceeds `threshold`.
pub fn topic_usage(locals: &[HdpLocalState], threshold: f64) -> usize {
    topic_token_mass(locals).into_iter().filter(|m| *m > threshold).count()
}

#[derive(Debug, Clone)]
pub struct HdpFrozen {
    pub elog_beta: Array2<f64>,
    pub elog_sticks: Vec<f64>,
}

/// The HDP in the form driven by [`crate::engine::run_svi`] and
/// [`crate::engine::run_batch`].
#[derive(Debug, Clone)]
pub struct Hdp {
    pub config: HdpConfig,
    pub num_terms: usize,
}

impl Hdp {
    pub fn new(config: HdpConfig, num_terms: usize) -> Self {
        Self { config, num_terms }
    }

    pub fn initial_globals(&self, num_documents: usize, seed: u64) -> Result<GlobalState> {
        Ok(HdpGlobalState::init(&self.config, self.num_terms, num_documents.max(1), seed)?.to_global_state())
    }

    pub fn state(&self, globals: &GlobalState, t: u64) -> Result<HdpGlobalState> {
        HdpGlobalState::from_global_state(globals, self.config.num_topics, t)
    }
}

impl ConjugateModel for Hdp {
    type Frozen = HdpFrozen;
    type Local = HdpLocalState;

    fn freeze(&self, globals: &GlobalState) -> Result<HdpFrozen> {
        let state = self.state(globals, 0)?;
        Ok(HdpFrozen {
            elog_beta: expected_log_beta(&state.lambda)?,
            elog_sticks: expect_log_sticks(&state.stick_a, &state.stick_b)?,
        })
    }

    fn local_step(
        &self,
        frozen: &HdpFrozen,
        doc: &Document,
        _warm_start: Option<&HdpLocalState>,
        control: LocalControl,
    ) -> Result<HdpLocalState> {
        local_step(doc, &frozen.elog_beta, &frozen.elog_sticks, self.config.alpha, self.config.doc_truncation, control)
    }

    fn intermediate_globals(&self, doc: &Document, local: &HdpLocalState, num_documents: usize) -> Result<Vec<GlobalBlock>> {
        Ok(intermediate_globals(doc, local, &self.config, self.num_terms, num_documents)?.to_blocks())
    }

    fn batch_globals(&self, corpus: &Corpus, locals: &[HdpLocalState]) -> Result<Vec<GlobalBlock>> {
        Ok(batch_globals(corpus, locals, &self.config)?.to_blocks())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: LocalControl = LocalControl { tolerance: 1e-12, max_sweeps: 1000 };

    #[test]
    fn stick_expectation_examples() {
        let e = expect_log_sticks(&[1.0; 4], &[1.0; 4]).unwrap();
        for (k, x) in e.iter().enumerate() {
            assert!((x + (k as f64 + 1.0)).abs() < 1e-12);
        }
        let e = expect_log_sticks(&[2.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!((e[0] + 0.5).abs() < 1e-12);
        assert!((e[1] + 3.0).abs() < 1e-12);
        let e = expect_log_sticks(&[3.0], &[2.0]).unwrap();
        assert!((e[0] - (psi(3.0) - psi(5.0))).abs() < 1e-15);
        assert!(expect_log_sticks(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn weight_examples() {
        let w = expected_topic_weights(&[1.0; 4], &[1.0; 4]);
        assert_eq!(w, vec![0.5, 0.25, 0.125, 0.0625]);
        let w = expected_topic_weights(&[1.0; 300], &[1.0; 300]);
        let s: f64 = w.iter().sum();
        // the residual 2^-300 is below one ulp of 1
        assert!(s <= 1.0 && (s - 1.0).abs() < 1e-15);
        assert_eq!(w[299], 0.5f64.powi(300));
    }

    #[test]
    fn single_stick_documents() {
        let doc = Document::from_counts([(0, 2), (1, 3)]).unwrap();
        let lambda = Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 3.0, 1.0, 2.0, 2.0]).unwrap();
        let elog_beta = expected_log_beta(&lambda).unwrap();
        let sticks = expect_log_sticks(&[1.0; 3], &[1.0; 3]).unwrap();
        let local = local_step(&doc, &elog_beta, &sticks, 0.7, 1, TIGHT).unwrap();
        assert!(local.phi.iter().all(|p| *p == 1.0));
        assert_eq!(local.gamma1, vec![6.0]);
        assert_eq!(local.gamma2, vec![0.7]);
        let mut expect: Vec<f64> = (0..3)
            .map(|k| sticks[k] + 2.0 * elog_beta[[k, 0]] + 3.0 * elog_beta[[k, 1]])
            .collect();
        softmax_in_place(&mut expect);
        for (a, b) in local.zeta.row(0).iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }

        let lambda = Array2::from_shape_vec((1, 2), vec![1.0, 2.0]).unwrap();
        let local = local_step(&doc, &expected_log_beta(&lambda).unwrap(), &[-1.0], 1.0, 1, TIGHT).unwrap();
        assert_eq!(local.zeta[[0, 0]], 1.0);
    }

    #[test]
    fn concentrated_pointer_intermediates() {
        let config = HdpConfig::new(3, 1, 1.0, 0.5, 0.01).unwrap();
        let doc = Document::from_counts([(1, 1)]).unwrap();
        let local = HdpLocalState {
            zeta: Array2::from_shape_vec((1, 3), vec![0.0, 1.0, 0.0]).unwrap(),
            phi: Array2::from_elem((1, 1), 1.0),
            gamma1: vec![2.0],
            gamma2: vec![1.0],
            sweeps: 1,
            converged: true,
            empty: false,
        };
        let out = intermediate_globals(&doc, &local, &config, 2, 10).unwrap();
        assert!((out.lambda[[1, 1]] - 10.01).abs() < 1e-12);
        assert_eq!(out.lambda[[0, 1]], 0.01);
        assert_eq!(out.stick_a, vec![1.0, 11.0, 1.0]);
        assert_eq!(out.stick_b, vec![10.5, 0.5, 0.5]);
    }

    #[test]
    fn uniform_pointers_spread_evenly() {
        let config = HdpConfig::new(4, 2, 1.0, 1.0, 0.01).unwrap();
        let doc = Document::from_counts([(0, 1)]).unwrap();
        let local = HdpLocalState {
            zeta: Array2::from_elem((2, 4), 0.25),
            phi: Array2::from_elem((1, 2), 0.5),
            gamma1: vec![1.5, 1.5],
            gamma2: vec![1.5, 1.0],
            sweeps: 1,
            converged: true,
            empty: false,
        };
        let out = intermediate_globals(&doc, &local, &config, 1, 8).unwrap();
        for a in &out.stick_a {
            assert!((a - (1.0 + 8.0 * 2.0 / 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_document_uses_stick_priors() {
        let lambda = Array2::from_elem((3, 2), 1.0);
        let sticks = expect_log_sticks(&[1.0; 3], &[1.0; 3]).unwrap();
        let local = local_step(&Document::empty(), &expected_log_beta(&lambda).unwrap(), &sticks, 1.0, 2, TIGHT).unwrap();
        assert!(local.empty);
        let config = HdpConfig::new(3, 2, 1.0, 1.0, 0.1).unwrap();
        let out = intermediate_globals(&Document::empty(), &local, &config, 2, 5).unwrap();
        assert!(out.lambda.iter().all(|x| *x == 0.1));
        assert!(out.stick_a[0] > out.stick_a[2]);
    }

    #[test]
    fn global_step_examples() {
        let config = HdpConfig::new(2, 1, 1.0, 1.0, 0.1).unwrap();
        let state = HdpGlobalState::init(&config, 3, 4, 1).unwrap();
        let same = HdpIntermediates {
            lambda: state.lambda.clone(),
            stick_a: state.stick_a.clone(),
            stick_b: state.stick_b.clone(),
        };
        let next = apply_global_step(&state, &same, 0.4).unwrap();
        assert_eq!(next.lambda, state.lambda);
        assert_eq!(next.t, 1);
        let target = HdpIntermediates {
            lambda: Array2::from_elem((2, 3), 3.0),
            stick_a: vec![2.0, 4.0],
            stick_b: vec![5.0, 1.0],
        };
        let full = apply_global_step(&state, &target, 1.0).unwrap();
        assert_eq!(full.lambda, target.lambda);
        assert_eq!(full.stick_a, target.stick_a);
        let half = apply_global_step(&state, &target, 0.5).unwrap();
        assert_eq!(half.stick_b, vec![3.0, 1.0]);
    }

    #[test]
    fn usage_counts() {
        let local = HdpLocalState {
            zeta: Array2::from_shape_vec((1, 3), vec![1.0, 0.0, 0.0]).unwrap(),
            phi: Array2::from_elem((2, 1), 1.0),
            gamma1: vec![6.0],
            gamma2: vec![1.0],
            sweeps: 1,
            converged: true,
            empty: false,
        };
        assert_eq!(topic_usage(std::slice::from_ref(&local), 4.9), 1);
        assert_eq!(topic_usage(std::slice::from_ref(&local), 5.1), 0);
    }

    #[test]
    fn rejects_document_truncation_above_corpus_truncation() {
        assert!(HdpConfig::new(2, 3, 1.0, 1.0, 0.01).is_err());
    }
}
