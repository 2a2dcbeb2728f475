//! Training runs: data loading, the evaluation schedule, metrics,
//! checkpoints and resumption.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use svi_core::corpus::{load_uci_bow, Corpus, TestSet};
use svi_core::engine::{
    run_batch, run_svi, Checkpoint, ConjugateModel, GlobalState, LocalControl, Progress, SviConfig, SviState,
};
use svi_core::eval::{evaluate_hdp, evaluate_lda, EvalReport};
use svi_core::hdp::Hdp;
use svi_core::lda::{Lda, LdaGlobalState};

use crate::args::ModelKind;
use crate::config::RunConfig;
use crate::error::{io_at, CliError};
use crate::model_file::{Loaded, ModelFile};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MODEL_FILE: &str = "model.json";

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u64,
    pub documents_seen: u64,
    pub wall_clock_seconds: f64,
    /// Absent when the run has no test set.
    pub predictive_log_likelihood: Option<f64>,
}

/// What a checkpoint records about the run beyond the engine state.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunRecord {
    config: RunConfig,
    wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub iteration: u64,
    pub final_log_likelihood: Option<f64>,
    pub wall_clock_seconds: f64,
}

pub fn load_corpus(docword: &Path, vocab: &Path) -> Result<Corpus, CliError> {
    let terms = File::open(vocab).map(BufReader::new).map_err(|e| io_at(vocab, e))?;
    load_corpus_with(docword, terms)
}

/// Load a docword file against an already opened vocabulary.
pub fn load_corpus_with(docword: &Path, vocab: impl BufRead) -> Result<Corpus, CliError> {
    let words = File::open(docword).map(BufReader::new).map_err(|e| io_at(docword, e))?;
    let (corpus, report) = load_uci_bow(words, vocab).map_err(|e| io_at(docword, e))?;
    if !report.empty_documents.is_empty() {
        eprintln!("{}: {} empty documents", docword.display(), report.empty_documents.len());
    }
    Ok(corpus)
}

pub fn test_set(corpus: &Corpus, heldout_fraction: f64, seed: u64) -> Result<TestSet, CliError> {
    let set = TestSet::from_documents(corpus.documents(), heldout_fraction, seed)?;
    if set.skipped > 0 {
        eprintln!("{} test documents have fewer than two unique terms and are skipped", set.skipped);
    }
    Ok(set)
}

/// Held-out score of `globals` under the model.
pub fn evaluate(model: &Loaded, globals: &GlobalState, iteration: u64, test: &TestSet, control: LocalControl)
    -> Result<EvalReport, CliError>
{
    Ok(match model {
        Loaded::Lda(m) => {
            let state = LdaGlobalState::from_global_state(globals, m.config.num_topics, iteration)?;
            evaluate_lda(&state, m.alpha(globals), test, control)?
        }
        Loaded::Hdp(m) => evaluate_hdp(&m.state(globals, iteration)?, &m.config, test, control)?,
    })
}

/// True when the document counter passes a multiple of `every` between
/// `before` and `after`.
fn crosses(before: u64, after: u64, every: u64) -> bool {
    every > 0 && before / every < after / every
}

pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Train from scratch into `config.out`.
pub fn train(config: &RunConfig) -> Result<Summary, CliError> {
    fs::create_dir_all(&config.out).map_err(|e| io_at(&config.out, e))?;
    let metrics = config.out.join(METRICS_FILE);
    File::create(&metrics).map_err(|e| io_at(&metrics, e))?;
    config.write_snapshot(&config.out)?;
    with_threads(config.threads, || execute(config, None, 0.0))?
}

/// Continue the run whose checkpoint is in `out`, optionally to a new
/// iteration count.
pub fn resume(out: &Path, iterations: Option<u64>, threads: Option<usize>) -> Result<Summary, CliError> {
    let path = out.join(CHECKPOINT_FILE);
    if !path.is_file() {
        return Err(CliError::config(format!("no checkpoint to resume at {}", path.display())));
    }
    let checkpoint = Checkpoint::read(&path).map_err(|e| io_at(&path, e))?;
    let record: RunRecord = serde_json::from_value(checkpoint.run.clone()).map_err(|e| io_at(&path, e))?;
    let mut config = record.config;
    if config.batch {
        return Err(CliError::config("batch runs cannot be resumed; only stochastic runs checkpoint their sampler"));
    }
    config.out = out.to_path_buf();
    config.iterations = iterations.unwrap_or(config.iterations);
    config.threads = threads.or(config.threads);
    if config.iterations < checkpoint.iteration {
        return Err(CliError::config(format!(
            "checkpoint is at iteration {}, beyond the requested {}",
            checkpoint.iteration, config.iterations
        )));
    }
    config.validate()?;
    truncate_metrics(&config, checkpoint.iteration)?;
    config.write_snapshot(out)?;
    let elapsed = record.wall_clock_seconds;
    with_threads(config.threads, || execute(&config, Some(checkpoint), elapsed))?
}

/// Drop metrics rows an uninterrupted run would not have written: rows
/// past the checkpoint, and an end-of-run row at the checkpoint that falls
/// off the evaluation schedule when the run is about to continue.
fn truncate_metrics(config: &RunConfig, checkpoint_iteration: u64) -> Result<(), CliError> {
    let path = config.out.join(METRICS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_at(&path, e))?;
    let mut kept = String::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: MetricsRow = serde_json::from_str(line).map_err(|e| io_at(&path, e))?;
        let keep = row.iteration < checkpoint_iteration
            || (row.iteration == checkpoint_iteration
                && (config.iterations == checkpoint_iteration
                    || crosses(row.documents_seen.saturating_sub(config.batch_size as u64), row.documents_seen, config.eval_every)));
        if keep {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    fs::write(&path, kept).map_err(|e| io_at(&path, e))
}

/// Everything the per-iteration observer needs.
struct Recorder<'a> {
    config: &'a RunConfig,
    svi: SviConfig,
    model: &'a Loaded,
    test: Option<TestSet>,
    metrics: File,
    started: Instant,
    elapsed_before: f64,
    last: Option<MetricsRow>,
}

impl Recorder<'_> {
    fn wall_clock(&self) -> f64 {
        self.elapsed_before + self.started.elapsed().as_secs_f64()
    }

    fn checkpoint(&self, state: &SviState) -> Result<(), CliError> {
        let record = RunRecord { config: self.config.clone(), wall_clock_seconds: self.wall_clock() };
        let run = serde_json::to_value(record).map_err(|e| CliError::io(e.to_string()))?;
        let path = self.config.out.join(CHECKPOINT_FILE);
        Checkpoint::capture(&self.svi, run, state).write(&path).map_err(|e| io_at(&path, e))
    }

    fn record(&mut self, state: &SviState) -> Result<(), CliError> {
        let score = match &self.test {
            Some(test) => Some(
                evaluate(self.model, &state.globals, state.iteration, test, self.svi.local_control())?
                    .per_word_log_likelihood,
            ),
            None => None,
        };
        let row = MetricsRow {
            iteration: state.iteration,
            documents_seen: state.documents_seen,
            wall_clock_seconds: self.wall_clock(),
            predictive_log_likelihood: score,
        };
        let line = serde_json::to_string(&row).map_err(|e| CliError::io(e.to_string()))?;
        writeln!(self.metrics, "{line}").map_err(|e| io_at(&self.config.out.join(METRICS_FILE), e))?;
        self.metrics.flush().map_err(|e| io_at(&self.config.out.join(METRICS_FILE), e))?;
        match score {
            Some(s) => eprintln!("iteration {:>7}  documents {:>10}  held-out {s:.6}", row.iteration, row.documents_seen),
            None => eprintln!("iteration {:>7}  documents {:>10}", row.iteration, row.documents_seen),
        }
        self.last = Some(row);
        self.checkpoint(state)
    }

    fn observe<M: ConjugateModel>(&mut self, p: &Progress<'_, M>) -> Result<(), CliError> {
        let after = p.state.documents_seen;
        let before = after - p.documents.len() as u64;
        if crosses(before, after, self.config.eval_every) || p.state.iteration == self.config.iterations {
            self.record(p.state)?;
        }
        Ok(())
    }
}

fn execute(config: &RunConfig, checkpoint: Option<Checkpoint>, elapsed_before: f64) -> Result<Summary, CliError> {
    let started = Instant::now();
    let corpus = load_corpus(&config.corpus, &config.vocab)?;
    let test = match &config.test {
        Some(path) => Some(test_set(&load_corpus(path, &config.vocab)?, config.heldout_fraction, config.seed)?),
        None => None,
    };
    let num_terms = corpus.num_terms();
    let model = match config.model {
        ModelKind::Lda => Loaded::Lda(Lda::new(config.lda()?, num_terms)),
        ModelKind::Hdp => Loaded::Hdp(Hdp::new(config.hdp()?, num_terms)),
    };
    let sampleable = corpus.documents().iter().filter(|d| !d.is_empty()).count();
    let state = match checkpoint {
        Some(cp) => cp.restore()?,
        None => {
            let globals = match &model {
                Loaded::Lda(m) => m.initial_globals(sampleable, config.seed)?,
                Loaded::Hdp(m) => m.initial_globals(sampleable, config.seed)?,
            };
            SviState::new(globals, config.seed)
        }
    };
    let metrics_path = config.out.join(METRICS_FILE);
    let metrics = OpenOptions::new().append(true).open(&metrics_path).map_err(|e| io_at(&metrics_path, e))?;
    let mut recorder = Recorder {
        config,
        svi: config.svi()?,
        model: &model,
        test,
        metrics,
        started,
        elapsed_before,
        last: None,
    };
    let state = match &model {
        Loaded::Lda(m) => drive(m, &corpus, state, &mut recorder)?,
        Loaded::Hdp(m) => drive(m, &corpus, state, &mut recorder)?,
    };
    recorder.checkpoint(&state)?;
    let path = config.out.join(MODEL_FILE);
    ModelFile::new(config, state.iteration, corpus.vocabulary().terms(), &state.globals).write(&path)?;
    Ok(Summary {
        iteration: state.iteration,
        final_log_likelihood: recorder.last.as_ref().and_then(|r| r.predictive_log_likelihood),
        wall_clock_seconds: recorder.wall_clock(),
    })
}

fn drive<M: ConjugateModel>(model: &M, corpus: &Corpus, state: SviState, recorder: &mut Recorder<'_>)
    -> Result<SviState, CliError>
{
    let svi = recorder.config.svi()?;
    let batch = recorder.config.batch;
    let sweeps = recorder.config.iterations;
    // the engine's observer speaks library errors; keep ours aside
    let mut failure: Option<CliError> = None;
    let mut observer = |p: &Progress<'_, M>| -> svi_core::Result<()> {
        recorder.observe(p).map_err(|e| {
            let msg = e.to_string();
            failure = Some(e);
            svi_core::Error::Io(std::io::Error::other(msg))
        })
    };
    let result = if batch {
        run_batch(model, corpus, sweeps, svi.local_control(), state, &mut observer)
    } else {
        run_svi(model, corpus, &svi, state, &mut observer)
    };
    match (result, failure) {
        (_, Some(e)) => Err(e),
        (Ok(run), None) => Ok(run.state),
        (Err(e), None) => Err(e.into()),
    }
}
