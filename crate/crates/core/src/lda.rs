//! Latent Dirichlet allocation.
//!
//! Topics are `β_k ~ Dirichlet(η)` with variational parameters `λ_k`.
//! Each document has proportions `θ_d ~ Dirichlet(α)` with variational
//! parameters `γ_d`, and one assignment distribution `φ` per unique term:
//! identical tokens have identical updates, so tokens are aggregated by term
//! and weighted by their count.
//!
//! The global state is exposed to the engine as one block per topic,
//! named `lambda[k]`.

use ndarray::{Array2, ArrayView1};
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::engine::{
    empirical_bayes_alpha_step, ConjugateModel, GlobalBlock, GlobalState, LocalControl,
};
use crate::error::{contract, domain, Result};
use crate::expfam::{expect_log_simplex, lgamma, log_normalizer_slice, psi1, softmax_in_place, DirichletParams};
use crate::random::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub eta: f64,
}

impl LdaConfig {
    pub fn new(num_topics: usize, alpha: f64, eta: f64) -> Result<Self> {
        if num_topics == 0 {
            return Err(contract("LDA needs at least one topic"));
        }
        for (name, v) in [("alpha", alpha), ("eta", eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { num_topics, alpha, eta })
    }

    /// α = 1/K and η = 0.01.
    pub fn with_defaults(num_topics: usize) -> Result<Self> {
        Self::new(num_topics, 1.0 / num_topics.max(1) as f64, 0.01)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaGlobalState {
    /// K × V topic Dirichlet parameters.
    pub lambda: Array2<f64>,
    pub t: u64,
}

pub(crate) fn lambda_block_name(k: usize) -> String {
    format!("lambda[{k}]")
}

/// Gather `K` consecutive blocks `lambda[0..K]` into a K × V matrix.
pub(crate) fn lambda_from_blocks(blocks: &[GlobalBlock], num_topics: usize) -> Result<Array2<f64>> {
    if blocks.len() < num_topics {
        return Err(contract(format!("expected {num_topics} topic blocks, found {}", blocks.len())));
    }
    let v = blocks[0].params.len();
    let mut lambda = Array2::zeros((num_topics, v));
    for (k, block) in blocks[..num_topics].iter().enumerate() {
        if block.name != lambda_block_name(k) || block.params.len() != v {
            return Err(contract(format!("unexpected block {} at topic position {k}", block.name)));
        }
        lambda.row_mut(k).iter_mut().zip(&block.params).for_each(|(l, p)| *l = *p);
    }
    Ok(lambda)
}

pub(crate) fn lambda_to_blocks(lambda: &Array2<f64>) -> Vec<GlobalBlock> {
    lambda
        .outer_iter()
        .enumerate()
        .map(|(k, row)| GlobalBlock::new(lambda_block_name(k), row.to_vec()))
        .collect()
}

impl LdaGlobalState {
    pub fn to_global_state(&self) -> GlobalState {
        GlobalState::new(lambda_to_blocks(&self.lambda))
    }

    pub fn from_global_state(globals: &GlobalState, num_topics: usize, t: u64) -> Result<Self> {
        Ok(Self { lambda: lambda_from_blocks(&globals.blocks, num_topics)?, t })
    }

    pub fn num_topics(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn num_terms(&self) -> usize {
        self.lambda.ncols()
    }

    /// `E[β_kv] = λ_kv / Σ_v λ_kv`.
    pub fn expected_topics(&self) -> Array2<f64> {
        row_normalize(&self.lambda)
    }
}

pub(crate) fn row_normalize(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.outer_iter_mut() {
        let s = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    out
}

/// Per-document variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaLocalState {
    /// Topic-proportion Dirichlet parameters, length K.
    pub gamma: Vec<f64>,
    /// U × K assignment probabilities, one row per unique term in term order.
    pub phi: Array2<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// The document had no tokens; `gamma` is the prior and `phi` has no rows.
    pub empty: bool,
}

impl LdaLocalState {
    /// `E[log θ_k]` under q(θ | γ).
    pub fn expected_log_theta(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.gamma.len()];
        expect_log_simplex(&self.gamma, &mut out);
        out
    }
}

/// Random topics: `λ_kv = η + x` with `x` exponential of mean `100·D/(K·V)`,
/// which resembles the counts from randomly assigning a corpus of `D`
/// hundred-word documents.
pub fn init_lambda(num_topics: usize, num_terms: usize, num_documents: usize, eta: f64, seed: u64) -> Result<LdaGlobalState> {
    if num_topics == 0 || num_terms == 0 || num_documents == 0 {
        return Err(contract("init_lambda needs positive sizes"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain(format!("eta must be positive, got {eta}")));
    }
    let lambda = random_topics(num_topics, num_terms, num_documents, eta, seed);
    Ok(LdaGlobalState { lambda, t: 0 })
}

pub(crate) fn random_topics(num_topics: usize, num_terms: usize, num_documents: usize, eta: f64, seed: u64) -> Array2<f64> {
    let mean = num_documents as f64 * 100.0 / (num_topics * num_terms) as f64;
    let exp = Exp::new(1.0 / mean).expect("positive rate");
    let mut rng = seeded_rng(seed, 0);
    Array2::from_shape_fn((num_topics, num_terms), |_| eta + exp.sample(&mut rng))
}

/// `E[log β_kv] = Ψ(λ_kv) − Ψ(Σ_v λ_kv)`, row by row.
pub fn expected_log_beta(lambda: &Array2<f64>) -> Result<Array2<f64>> {
    if let Some(bad) = lambda.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(domain(format!("topic parameters must be positive, got {bad}")));
    }
    let mut out = Array2::zeros(lambda.raw_dim());
    for (src, mut dst) in lambda.outer_iter().zip(out.outer_iter_mut()) {
        let src = src.to_vec();
        let mut buf = vec![0.0; src.len()];
        expect_log_simplex(&src, &mut buf);
        dst.iter_mut().zip(buf).for_each(|(d, b)| *d = b);
    }
    Ok(out)
}

fn check_elog_beta(doc: &Document, elog_beta: &Array2<f64>) -> Result<()> {
    if elog_beta.nrows() == 0 {
        return Err(contract("no topics"));
    }
    if let Some(t) = doc.terms().last() {
        if t >= elog_beta.ncols() {
            return Err(contract(format!("term {t} outside a vocabulary of {}", elog_beta.ncols())));
        }
    }
    Ok(())
}

/// Fit γ and φ for one document against fixed topic expectations, starting
/// from `γ = 1`.
///
/// Alternates `φ_v ∝ exp{E[log θ] + E[log β_{·v}]}` and
/// `γ = α + Σ_v count_v φ_v` until the mean absolute change of γ is at most
/// `control.tolerance`. The returned γ is the update computed from the
/// returned φ.
pub fn local_step(doc: &Document, elog_beta: &Array2<f64>, alpha: f64, control: LocalControl) -> Result<LdaLocalState> {
    local_step_from(doc, elog_beta, alpha, control, None)
}

/// [`local_step`] starting from a given γ instead of all ones.
pub fn local_step_from(
    doc: &Document,
    elog_beta: &Array2<f64>,
    alpha: f64,
    control: LocalControl,
    initial_gamma: Option<&[f64]>,
) -> Result<LdaLocalState> {
    check_elog_beta(doc, elog_beta)?;
    let k = elog_beta.nrows();
    if doc.is_empty() {
        return Ok(LdaLocalState {
            gamma: vec![alpha; k],
            phi: Array2::zeros((0, k)),
            sweeps: 0,
            converged: true,
            empty: true,
        });
    }
    let mut gamma = match initial_gamma {
        Some(g) if g.len() == k => g.to_vec(),
        Some(g) => return Err(contract(format!("initial gamma has {} entries, expected {k}", g.len()))),
        None => vec![1.0; k],
    };
    let u = doc.unique_terms();
    // E[log β] restricted to the document's terms, U × K
    let term_elog: Vec<ArrayView1<f64>> = doc.terms().map(|v| elog_beta.column(v)).collect();
    let mut phi = Array2::zeros((u, k));
    let mut elog_theta = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < control.max_sweeps {
        sweeps += 1;
        expect_log_simplex(&gamma, &mut elog_theta);
        next.iter_mut().for_each(|g| *g = alpha);
        for (i, (&(_, count), col)) in doc.counts().iter().zip(&term_elog).enumerate() {
            let mut row = phi.row_mut(i);
            let row = row.as_slice_mut().expect("contiguous row");
            for ((r, e), b) in row.iter_mut().zip(&elog_theta).zip(col.iter()) {
                *r = e + b;
            }
            softmax_in_place(row);
            let c = f64::from(count);
            for (g, p) in next.iter_mut().zip(row.iter()) {
                *g += c * p;
            }
        }
        let change = gamma.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
        std::mem::swap(&mut gamma, &mut next);
        if change <= control.tolerance {
            converged = true;
            break;
        }
    }
    Ok(LdaLocalState { gamma, phi, sweeps, converged, empty: false })
}

fn check_phi(doc: &Document, phi: &Array2<f64>) -> Result<()> {
    if phi.nrows() != doc.unique_terms() {
        return Err(contract(format!(
            "phi has {} rows for a document with {} unique terms",
            phi.nrows(),
            doc.unique_terms()
        )));
    }
    Ok(())
}

/// `λ̂_kv = η + D · count_v · φ_vk`: the topic update for a corpus made of
/// `D` copies of `doc`.
pub fn intermediate_lambda(doc: &Document, phi: &Array2<f64>, eta: f64, num_terms: usize, num_documents: usize) -> Result<Array2<f64>> {
    check_phi(doc, phi)?;
    if doc.terms().last().is_some_and(|t| t >= num_terms) {
        return Err(contract("document term outside the vocabulary"));
    }
    let mut out = Array2::from_elem((phi.ncols(), num_terms), eta);
    let scale = num_documents as f64;
    for (&(v, count), row) in doc.counts().iter().zip(phi.outer_iter()) {
        let c = scale * f64::from(count);
        for (k, p) in row.iter().enumerate() {
            out[[k, v]] += c * p;
        }
    }
    Ok(out)
}

/// `λ_kv = η + Σ_d count_dv φ_dvk` over the whole corpus.
pub fn batch_global_step(corpus: &Corpus, locals: &[LdaLocalState], eta: f64) -> Result<Array2<f64>> {
    if locals.len() != corpus.num_documents() {
        return Err(contract(format!(
            "{} local states for {} documents",
            locals.len(),
            corpus.num_documents()
        )));
    }
    let k = locals.first().map_or(0, |l| l.gamma.len());
    let mut out = Array2::from_elem((k, corpus.num_terms()), eta);
    for (doc, local) in corpus.documents().iter().zip(locals) {
        check_phi(doc, &local.phi)?;
        if local.phi.ncols() != k && !doc.is_empty() {
            return Err(contract("local states disagree on the number of topics"));
        }
        for (&(v, count), row) in doc.counts().iter().zip(local.phi.outer_iter()) {
            let c = f64::from(count);
            for (kk, p) in row.iter().enumerate() {
                out[[kk, v]] += c * p;
            }
        }
    }
    Ok(out)
}

/// Natural gradient of the ELBO in λ: the coordinate update minus the
/// current value.
pub fn natural_gradient_lambda(current: &Array2<f64>, batch_target: &Array2<f64>) -> Result<Array2<f64>> {
    if current.dim() != batch_target.dim() {
        return Err(contract(format!(
            "shapes {:?} and {:?} differ",
            current.dim(),
            batch_target.dim()
        )));
    }
    Ok(batch_target - current)
}

/// Fisher information of a Dirichlet in its natural parameters,
/// `diag(Ψ′(λ_v)) − Ψ′(Σ λ)·1·1ᵀ`.
pub fn fisher_metric_dirichlet(params: &DirichletParams) -> Array2<f64> {
    let c = params.concentration();
    let shared = psi1(c.iter().sum());
    let mut g = Array2::from_elem((c.len(), c.len()), -shared);
    for (i, &x) in c.iter().enumerate() {
        g[[i, i]] += psi1(x);
    }
    g
}

/// The three groups of ELBO terms, kept apart for testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    /// `Σ_d Σ_v count Σ_k φ (E[log θ_dk] + E[log β_kv] − log φ)`.
    pub words: f64,
    /// `Σ_d E[log p(θ_d | α)] − E[log q(θ_d | γ_d)]`.
    pub documents: f64,
    /// `Σ_k E[log p(β_k | η)] − E[log q(β_k | λ_k)]`.
    pub topics: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.words + self.documents + self.topics
    }
}

/// Evidence lower bound of the whole corpus.
pub fn elbo(corpus: &Corpus, lambda: &Array2<f64>, locals: &[LdaLocalState], config: &LdaConfig) -> Result<f64> {
    Ok(elbo_terms(corpus, lambda, locals, config)?.total())
}

pub fn elbo_terms(corpus: &Corpus, lambda: &Array2<f64>, locals: &[LdaLocalState], config: &LdaConfig) -> Result<ElboTerms> {
    let k = config.num_topics;
    if lambda.nrows() != k || lambda.ncols() != corpus.num_terms() {
        return Err(contract(format!(
            "lambda is {:?}, expected ({k}, {})",
            lambda.dim(),
            corpus.num_terms()
        )));
    }
    if locals.len() != corpus.num_documents() {
        return Err(contract("one local state per document is required"));
    }
    let elog_beta = expected_log_beta(lambda)?;
    let alpha = config.alpha;
    let kf = k as f64;
    let prior_theta_norm = kf * lgamma(alpha) - lgamma(kf * alpha);

    let mut words = 0.0;
    let mut documents = 0.0;
    for (doc, local) in corpus.documents().iter().zip(locals) {
        check_phi(doc, &local.phi)?;
        if local.gamma.len() != k || (!doc.is_empty() && local.phi.ncols() != k) {
            return Err(contract("local state has the wrong number of topics"));
        }
        let elog_theta = local.expected_log_theta();
        for (&(v, count), row) in doc.counts().iter().zip(local.phi.outer_iter()) {
            let mut s = 0.0;
            for (kk, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    s += p * (elog_theta[kk] + elog_beta[[kk, v]] - p.ln());
                }
            }
            words += f64::from(count) * s;
        }
        let mut d_term = -prior_theta_norm + log_normalizer_slice(&local.gamma);
        for (g, e) in local.gamma.iter().zip(&elog_theta) {
            d_term += (alpha - g) * e;
        }
        documents += d_term;
    }

    let eta = config.eta;
    let vf = corpus.num_terms() as f64;
    let prior_beta_norm = vf * lgamma(eta) - lgamma(vf * eta);
    let mut topics = 0.0;
    for (lam, elog) in lambda.outer_iter().zip(elog_beta.outer_iter()) {
        let lam = lam.to_vec();
        let mut t = -prior_beta_norm + log_normalizer_slice(&lam);
        for (l, e) in lam.iter().zip(elog.iter()) {
            t += (eta - l) * e;
        }
        topics += t;
    }
    Ok(ElboTerms { words, documents, topics })
}

/// Frozen expectations for one iteration.
#[derive(Debug, Clone)]
pub struct LdaFrozen {
    pub elog_beta: Array2<f64>,
    pub alpha: f64,
}

/// LDA in the form driven by [`crate::engine::run_svi`] and
/// [`crate::engine::run_batch`].
#[derive(Debug, Clone)]
pub struct Lda {
    pub config: LdaConfig,
    pub num_terms: usize,
    /// Take an empirical-Bayes step on α after every stochastic iteration.
    pub fit_alpha: bool,
}

impl Lda {
    pub fn new(config: LdaConfig, num_terms: usize) -> Self {
        Self { config, num_terms, fit_alpha: false }
    }

    pub fn with_alpha_fitting(mut self, fit: bool) -> Self {
        self.fit_alpha = fit;
        self
    }

    /// Randomly initialized globals for a corpus of `num_documents`.
    pub fn initial_globals(&self, num_documents: usize, seed: u64) -> Result<GlobalState> {
        let state = init_lambda(self.config.num_topics, self.num_terms, num_documents.max(1), self.config.eta, seed)?;
        let mut globals = state.to_global_state();
        if self.fit_alpha {
            globals.hyperparameters.insert("alpha".to_string(), self.config.alpha);
        }
        Ok(globals)
    }

    pub fn alpha(&self, globals: &GlobalState) -> f64 {
        globals.hyperparameters.get("alpha").copied().unwrap_or(self.config.alpha)
    }

    pub fn lambda(&self, globals: &GlobalState) -> Result<Array2<f64>> {
        lambda_from_blocks(&globals.blocks, self.config.num_topics)
    }
}

impl ConjugateModel for Lda {
    type Frozen = LdaFrozen;
    type Local = LdaLocalState;

    fn freeze(&self, globals: &GlobalState) -> Result<LdaFrozen> {
        Ok(LdaFrozen {
            elog_beta: expected_log_beta(&self.lambda(globals)?)?,
            alpha: self.alpha(globals),
        })
    }

    fn local_step(
        &self,
        frozen: &LdaFrozen,
        doc: &Document,
        warm_start: Option<&LdaLocalState>,
        control: LocalControl,
    ) -> Result<LdaLocalState> {
        let init = warm_start.filter(|w| !w.empty).map(|w| w.gamma.as_slice());
        local_step_from(doc, &frozen.elog_beta, frozen.alpha, control, init)
    }

    fn intermediate_globals(&self, doc: &Document, local: &LdaLocalState, num_documents: usize) -> Result<Vec<GlobalBlock>> {
        let lambda_hat = intermediate_lambda(doc, &local.phi, self.config.eta, self.num_terms, num_documents)?;
        Ok(lambda_to_blocks(&lambda_hat))
    }

    fn batch_globals(&self, corpus: &Corpus, locals: &[LdaLocalState]) -> Result<Vec<GlobalBlock>> {
        Ok(lambda_to_blocks(&batch_global_step(corpus, locals, self.config.eta)?))
    }

    fn hyperparameter_step(&self, globals: &mut GlobalState, locals: &[LdaLocalState], num_documents: usize, rho: f64) -> Result<()> {
        if !self.fit_alpha || locals.is_empty() {
            return Ok(());
        }
        let k = self.config.num_topics;
        let mut mean = vec![0.0; k];
        for local in locals {
            for (m, e) in mean.iter_mut().zip(local.expected_log_theta()) {
                *m += e / locals.len() as f64;
            }
        }
        let alpha = self.alpha(globals);
        let next = empirical_bayes_alpha_step(alpha, k, &mean, num_documents, rho)?;
        globals.hyperparameters.insert("alpha".to_string(), next);
        Ok(())
    }
}

/// Sum of φ columns weighted by counts, i.e. `γ − α`.
pub fn expected_topic_counts(doc: &Document, local: &LdaLocalState) -> Vec<f64> {
    let mut out = vec![0.0; local.gamma.len()];
    for (&(_, count), row) in doc.counts().iter().zip(local.phi.outer_iter()) {
        for (o, p) in out.iter_mut().zip(row.iter()) {
            *o += f64::from(count) * p;
        }
    }
    out
}
