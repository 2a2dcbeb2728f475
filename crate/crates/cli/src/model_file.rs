//! The `model.json` written at the end of training.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use svi_core::engine::GlobalState;
use svi_core::hdp::{expected_topic_weights, Hdp, HdpConfig};
use svi_core::lda::{Lda, LdaConfig, LdaGlobalState};

use crate::args::ModelKind;
use crate::config::RunConfig;
use crate::error::{io_at, CliError};

const MODEL_FORMAT: &str = "svi-model";
const MODEL_VERSION: u32 = 1;

/// How the test set was split and fitted during training, so `eval` can
/// reproduce the logged scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub heldout_fraction: f64,
    pub split_seed: u64,
    pub local_tolerance: f64,
    pub local_max_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: ModelKind,
    pub num_topics: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_truncation: Option<usize>,
    pub alpha: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub iteration: u64,
    pub eval: EvalSettings,
    pub vocabulary: Vec<String>,
    pub globals: GlobalState,
}

/// A model ready for scoring or inspection.
pub enum Loaded {
    Lda(Lda),
    Hdp(Hdp),
}

impl ModelFile {
    pub fn new(config: &RunConfig, iteration: u64, vocabulary: &[String], globals: &GlobalState) -> Self {
        let hdp = config.model == ModelKind::Hdp;
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: config.model,
            num_topics: config.k,
            doc_truncation: hdp.then_some(config.t),
            alpha: config.alpha,
            eta: config.eta,
            omega: hdp.then_some(config.omega),
            iteration,
            eval: EvalSettings {
                heldout_fraction: config.heldout_fraction,
                split_seed: config.seed,
                local_tolerance: config.local_tolerance,
                local_max_sweeps: config.local_max_sweeps,
            },
            vocabulary: vocabulary.to_vec(),
            globals: globals.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string(self).map_err(|e| io_at(path, e))?;
        fs::write(path, text + "\n").map_err(|e| io_at(path, e))
    }

    /// Read and check a model file; any defect is an I/O failure.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| io_at(path, e))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(io_at(path, format!("not a version {MODEL_VERSION} {MODEL_FORMAT} file")));
        }
        file.model().map_err(|e| io_at(path, e))?.check(&file.globals).map_err(|e| io_at(path, e))?;
        Ok(file)
    }

    pub fn model(&self) -> Result<Loaded, CliError> {
        let v = self.vocabulary.len();
        Ok(match self.model {
            ModelKind::Lda => Loaded::Lda(Lda::new(LdaConfig::new(self.num_topics, self.alpha, self.eta)?, v)),
            ModelKind::Hdp => {
                let t = self.doc_truncation.ok_or_else(|| CliError::io("HDP model without doc_truncation"))?;
                let omega = self.omega.ok_or_else(|| CliError::io("HDP model without omega"))?;
                Loaded::Hdp(Hdp::new(HdpConfig::new(self.num_topics, t, self.alpha, omega, self.eta)?, v))
            }
        })
    }

    /// Expected topics `E[β_k]` in display order, with the expected
    /// corpus-level weight of each topic for the HDP. HDP topics are sorted
    /// by decreasing weight, ties by topic index.
    pub fn ranked_topics(&self) -> Result<Vec<RankedTopic>, CliError> {
        let mut topics = Vec::new();
        match self.model()? {
            Loaded::Lda(m) => {
                let state = LdaGlobalState::from_global_state(&self.globals, m.config.num_topics, self.iteration)?;
                for (k, row) in state.expected_topics().outer_iter().enumerate() {
                    topics.push(RankedTopic { index: k, weight: None, terms: row.to_vec() });
                }
            }
            Loaded::Hdp(m) => {
                let state = m.state(&self.globals, self.iteration)?;
                let weights = expected_topic_weights(&state.stick_a, &state.stick_b);
                for (k, row) in state.expected_topics().outer_iter().enumerate() {
                    topics.push(RankedTopic { index: k, weight: Some(weights[k]), terms: row.to_vec() });
                }
                topics.sort_by(|a, b| b.weight.unwrap().total_cmp(&a.weight.unwrap()).then(a.index.cmp(&b.index)));
            }
        }
        Ok(topics)
    }
}

pub struct RankedTopic {
    pub index: usize,
    pub weight: Option<f64>,
    /// `E[β_k]` over the vocabulary.
    pub terms: Vec<f64>,
}

impl Loaded {
    /// The globals must have the shapes the configuration implies.
    fn check(&self, globals: &GlobalState) -> Result<(), CliError> {
        match self {
            Loaded::Lda(m) => {
                let lambda = m.lambda(globals)?;
                if lambda.ncols() != m.num_terms {
                    return Err(CliError::io("topic width does not match the vocabulary"));
                }
            }
            Loaded::Hdp(m) => {
                let state = m.state(globals, 0)?;
                if state.lambda.ncols() != m.num_terms {
                    return Err(CliError::io("topic width does not match the vocabulary"));
                }
            }
        }
        Ok(())
    }
}
