use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{blocked_svi_step, GlobalBlock, MinibatchAccumulator};
use super::SviConfig;
use crate::corpus::{Corpus, Document};
use crate::error::{contract, Result};
use crate::random::{seeded_rng, SeededRng};

/// ChaCha stream used for minibatch sampling; stream 0 initializes globals.
pub(crate) const SAMPLING_STREAM: u64 = 1;

/// Stopping rule for a per-document local optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalControl {
    /// Stop once the mean absolute change of the monitored parameters is at most this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

/// All global variational parameters plus point-estimated hyperparameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalState {
    pub blocks: Vec<GlobalBlock>,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

impl GlobalState {
    pub fn new(blocks: Vec<GlobalBlock>) -> Self {
        Self { blocks, hyperparameters: BTreeMap::new() }
    }

    pub fn block(&self, name: &str) -> Option<&GlobalBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// A conjugate model in the form the engine drives.
///
/// Local steps must be pure functions of the frozen globals and the document
/// so that a minibatch can be processed in parallel.
pub trait ConjugateModel: Sync {
    /// Expectations derived from the globals, shared by every local step of an iteration.
    type Frozen: Sync;
    type Local: Send + Sync;

    fn freeze(&self, globals: &GlobalState) -> Result<Self::Frozen>;

    fn local_step(
        &self,
        frozen: &Self::Frozen,
        doc: &Document,
        warm_start: Option<&Self::Local>,
        control: LocalControl,
    ) -> Result<Self::Local>;

    /// Coordinate update of the globals for a corpus of `num_documents`
    /// copies of `doc`, block for block in the order of the global state.
    fn intermediate_globals(&self, doc: &Document, local: &Self::Local, num_documents: usize)
        -> Result<Vec<GlobalBlock>>;

    /// Coordinate update of the globals given locals for every document.
    fn batch_globals(&self, corpus: &Corpus, locals: &[Self::Local]) -> Result<Vec<GlobalBlock>>;

    /// Optional hyperparameter update run after each stochastic step.
    fn hyperparameter_step(
        &self,
        _globals: &mut GlobalState,
        _locals: &[Self::Local],
        _num_documents: usize,
        _rho: f64,
    ) -> Result<()> {
        Ok(())
    }
}

/// Mutable state of a run: globals, counters, and the sampling generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SviState {
    pub globals: GlobalState,
    /// Completed outer iterations, t.
    pub iteration: u64,
    pub documents_seen: u64,
    pub rng: SeededRng,
}

impl SviState {
    pub fn new(globals: GlobalState, seed: u64) -> Self {
        Self {
            globals,
            iteration: 0,
            documents_seen: 0,
            rng: seeded_rng(seed, SAMPLING_STREAM),
        }
    }
}

/// What an observer sees after each iteration.
pub struct Progress<'a, M: ConjugateModel + ?Sized> {
    pub state: &'a SviState,
    /// Step size used for the iteration that just finished.
    pub rho: f64,
    /// Documents analyzed in this iteration.
    pub documents: &'a [usize],
    pub locals: &'a [M::Local],
}

pub trait Observer<M: ConjugateModel + ?Sized> {
    fn after_iteration(&mut self, progress: &Progress<'_, M>) -> Result<()>;
}

impl<M, F> Observer<M> for F
where
    M: ConjugateModel + ?Sized,
    F: FnMut(&Progress<'_, M>) -> Result<()>,
{
    fn after_iteration(&mut self, progress: &Progress<'_, M>) -> Result<()> {
        self(progress)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: u64,
    pub documents_seen: u64,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct SviRun {
    pub state: SviState,
    pub trajectory: Vec<StepRecord>,
}

/// Draw `size` document indices uniformly from `0..num_documents`.
pub fn sample_minibatch<R: Rng + ?Sized>(
    num_documents: usize,
    size: usize,
    with_replacement: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if size == 0 || num_documents == 0 {
        return Err(contract(format!("cannot sample {size} of {num_documents} documents")));
    }
    if with_replacement {
        Ok((0..size).map(|_| rng.random_range(0..num_documents)).collect())
    } else if size > num_documents {
        Err(contract(format!(
            "cannot sample {size} distinct documents from {num_documents}"
        )))
    } else {
        Ok(rand::seq::index::sample(rng, num_documents, size).into_vec())
    }
}

/// Stochastic variational inference until `config.max_iterations` steps
/// have been taken in total.
///
/// Each iteration samples a minibatch of non-empty documents, runs the local
/// steps against frozen globals (in parallel on the current rayon pool), averages
/// the intermediate globals, and blends every block with the same `ρ_t`.
/// Results do not depend on the thread count.
pub fn run_svi<M: ConjugateModel>(
    model: &M,
    corpus: &Corpus,
    config: &SviConfig,
    mut state: SviState,
    observer: &mut dyn Observer<M>,
) -> Result<SviRun> {
    let pool: Vec<usize> = (0..corpus.num_documents())
        .filter(|&d| !corpus.document(d).is_empty())
        .collect();
    if pool.is_empty() && state.iteration < config.max_iterations {
        return Err(contract("corpus has no non-empty documents to sample"));
    }
    config.validate(pool.len())?;
    let control = config.local_control();
    let num_documents = pool.len();
    let mut trajectory = Vec::new();

    while state.iteration < config.max_iterations {
        let rho = config.schedule.rho(state.iteration)?;
        let picks = sample_minibatch(num_documents, config.minibatch_size, config.sample_with_replacement, &mut state.rng)?;
        let documents: Vec<usize> = picks.into_iter().map(|i| pool[i]).collect();

        let frozen = model.freeze(&state.globals)?;
        let locals = documents
            .par_iter()
            .map(|&d| model.local_step(&frozen, corpus.document(d), None, control))
            .collect::<Result<Vec<_>>>()?;
        drop(frozen);

        let mut acc = MinibatchAccumulator::default();
        for (&d, local) in documents.iter().zip(&locals) {
            acc.add(&model.intermediate_globals(corpus.document(d), local, num_documents)?)?;
        }
        let averaged = acc.finish()?;
        let mut globals = GlobalState {
            blocks: blocked_svi_step(&state.globals.blocks, &averaged, rho)?,
            hyperparameters: state.globals.hyperparameters.clone(),
        };
        model.hyperparameter_step(&mut globals, &locals, num_documents, rho)?;
        state.globals = globals;
        state.iteration += 1;
        state.documents_seen += documents.len() as u64;

        trajectory.push(StepRecord {
            iteration: state.iteration,
            documents_seen: state.documents_seen,
            rho,
        });
        observer.after_iteration(&Progress {
            state: &state,
            rho,
            documents: &documents,
            locals: &locals,
        })?;
    }
    Ok(SviRun { state, trajectory })
}

/// Batch coordinate-ascent variational inference until `sweeps` full sweeps
/// have been taken in total.
///
/// Each sweep optimizes the locals of every document against the current
/// globals and then replaces the globals by their coordinate update. From
/// the second sweep on, local steps are warm-started from the previous
/// sweep's locals, so every update is an exact coordinate maximization and
/// the ELBO cannot decrease.
pub fn run_batch<M: ConjugateModel>(
    model: &M,
    corpus: &Corpus,
    sweeps: u64,
    control: LocalControl,
    mut state: SviState,
    observer: &mut dyn Observer<M>,
) -> Result<SviRun> {
    let documents: Vec<usize> = (0..corpus.num_documents()).collect();
    let mut previous: Option<Vec<M::Local>> = None;
    let mut trajectory = Vec::new();
    while state.iteration < sweeps {
        let frozen = model.freeze(&state.globals)?;
        let locals = documents
            .par_iter()
            .map(|&d| {
                let warm = previous.as_ref().map(|p| &p[d]);
                model.local_step(&frozen, corpus.document(d), warm, control)
            })
            .collect::<Result<Vec<_>>>()?;
        drop(frozen);
        let blocks = model.batch_globals(corpus, &locals)?;
        if blocks.len() != state.globals.blocks.len()
            || blocks.iter().zip(&state.globals.blocks).any(|(a, b)| a.name != b.name)
        {
            return Err(contract("batch update does not align with the global blocks"));
        }
        state.globals.blocks = blocks;
        state.iteration += 1;
        state.documents_seen += documents.len() as u64;
        trajectory.push(StepRecord {
            iteration: state.iteration,
            documents_seen: state.documents_seen,
            rho: 1.0,
        });
        observer.after_iteration(&Progress {
            state: &state,
            rho: 1.0,
            documents: &documents,
            locals: &locals,
        })?;
        previous = Some(locals);
    }
    Ok(SviRun { state, trajectory })
}
