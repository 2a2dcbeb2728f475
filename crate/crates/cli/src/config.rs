//! Resolution of flags and config files into a complete run configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use svi_core::engine::{StepSchedule, SviConfig};
use svi_core::hdp::HdpConfig;
use svi_core::lda::LdaConfig;

use crate::args::{ModelKind, RunFlags};
use crate::error::{io_at, CliError};

const DEFAULT_LDA_TOPICS: usize = 100;
const DEFAULT_HELDOUT_FRACTION: f64 = 0.5;

/// Fully resolved settings of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub corpus: PathBuf,
    pub vocab: PathBuf,
    pub test: Option<PathBuf>,
    pub out: PathBuf,
    pub k: usize,
    /// Unused by LDA.
    pub t: usize,
    pub alpha: f64,
    pub eta: f64,
    /// Unused by LDA.
    pub omega: f64,
    pub kappa: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub iterations: u64,
    pub eval_every: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub local_tolerance: f64,
    pub local_max_sweeps: usize,
    pub heldout_fraction: f64,
    pub batch: bool,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::config(format!("invalid value {value:?} for {key}: {e}")))
}

impl RunFlags {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = || PathBuf::from(value);
        match key {
            "model" => {
                self.model = Some(ModelKind::from_str(value, true).map_err(|e| CliError::config(format!("model: {e}")))?)
            }
            "corpus" => self.corpus = Some(path()),
            "vocab" => self.vocab = Some(path()),
            "test" => self.test = Some(path()),
            "out" => self.out = Some(path()),
            "k" => self.k = Some(parse(key, value)?),
            "t" => self.t = Some(parse(key, value)?),
            "alpha" => self.alpha = Some(parse(key, value)?),
            "eta" => self.eta = Some(parse(key, value)?),
            "omega" => self.omega = Some(parse(key, value)?),
            "kappa" => self.kappa = Some(parse(key, value)?),
            "tau" => self.tau = Some(parse(key, value)?),
            "batch-size" => self.batch_size = Some(parse(key, value)?),
            "iterations" => self.iterations = Some(parse(key, value)?),
            "eval-every" => self.eval_every = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "threads" => self.threads = Some(parse(key, value)?),
            "local-tolerance" => self.local_tolerance = Some(parse(key, value)?),
            "local-max-sweeps" => self.local_max_sweeps = Some(parse(key, value)?),
            "heldout-fraction" => self.heldout_fraction = Some(parse(key, value)?),
            "batch" => self.batch = parse(key, value)?,
            _ => return Err(CliError::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parse a flat `key = value` file. Keys may use `-` or `_`; `#` starts a comment line.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        let mut flags = Self::default();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            if seen.contains(&key) {
                return Err(CliError::config(format!("config key {key:?} given twice")));
            }
            flags.set(&key, value.trim())?;
            seen.push(key);
        }
        Ok(flags)
    }

    /// Fill every unset field from `fallback`.
    fn or(self, fallback: Self) -> Self {
        Self {
            config: self.config,
            model: self.model.or(fallback.model),
            corpus: self.corpus.or(fallback.corpus),
            vocab: self.vocab.or(fallback.vocab),
            test: self.test.or(fallback.test),
            out: self.out.or(fallback.out),
            k: self.k.or(fallback.k),
            t: self.t.or(fallback.t),
            alpha: self.alpha.or(fallback.alpha),
            eta: self.eta.or(fallback.eta),
            omega: self.omega.or(fallback.omega),
            kappa: self.kappa.or(fallback.kappa),
            tau: self.tau.or(fallback.tau),
            batch_size: self.batch_size.or(fallback.batch_size),
            iterations: self.iterations.or(fallback.iterations),
            eval_every: self.eval_every.or(fallback.eval_every),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            local_tolerance: self.local_tolerance.or(fallback.local_tolerance),
            local_max_sweeps: self.local_max_sweeps.or(fallback.local_max_sweeps),
            heldout_fraction: self.heldout_fraction.or(fallback.heldout_fraction),
            batch: self.batch || fallback.batch,
        }
    }

    /// Names of the run settings given on the command line, other than
    /// the ones a resumed run may change.
    pub fn fixed_on_resume(&self) -> Vec<&'static str> {
        let given = [
            ("config", self.config.is_some()),
            ("model", self.model.is_some()),
            ("corpus", self.corpus.is_some()),
            ("vocab", self.vocab.is_some()),
            ("test", self.test.is_some()),
            ("k", self.k.is_some()),
            ("t", self.t.is_some()),
            ("alpha", self.alpha.is_some()),
            ("eta", self.eta.is_some()),
            ("omega", self.omega.is_some()),
            ("kappa", self.kappa.is_some()),
            ("tau", self.tau.is_some()),
            ("batch-size", self.batch_size.is_some()),
            ("eval-every", self.eval_every.is_some()),
            ("seed", self.seed.is_some()),
            ("local-tolerance", self.local_tolerance.is_some()),
            ("local-max-sweeps", self.local_max_sweeps.is_some()),
            ("heldout-fraction", self.heldout_fraction.is_some()),
        ];
        given.into_iter().filter(|(_, set)| *set).map(|(name, _)| name).collect()
    }

    /// Merge with the `--config` file, if any, and fill in defaults.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let flags = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
                self.or(Self::from_config_text(&text)?)
            }
            None => self,
        };
        let required = |p: Option<PathBuf>, name: &str| p.ok_or_else(|| CliError::config(format!("--{name} is required")));
        let model = flags.model.unwrap_or(ModelKind::Lda);
        let (k, t) = match model {
            ModelKind::Lda => (flags.k.unwrap_or(DEFAULT_LDA_TOPICS), flags.t.unwrap_or(0)),
            ModelKind::Hdp => {
                let d = HdpConfig::default();
                (flags.k.unwrap_or(d.num_topics), flags.t.unwrap_or(d.doc_truncation))
            }
        };
        let alpha = flags.alpha.unwrap_or(match model {
            ModelKind::Lda => 1.0 / k.max(1) as f64,
            ModelKind::Hdp => HdpConfig::default().alpha,
        });
        let tolerance_scale = match model {
            ModelKind::Lda => k,
            ModelKind::Hdp => t,
        };
        let mut config = RunConfig {
            model,
            corpus: required(flags.corpus, "corpus")?,
            vocab: required(flags.vocab, "vocab")?,
            test: flags.test,
            out: required(flags.out, "out")?,
            k,
            t,
            alpha,
            eta: flags.eta.unwrap_or(0.01),
            omega: flags.omega.unwrap_or(HdpConfig::default().omega),
            kappa: flags.kappa.unwrap_or(0.9),
            tau: flags.tau.unwrap_or(1.0),
            batch_size: flags.batch_size.unwrap_or(100),
            iterations: flags.iterations.unwrap_or(1000),
            eval_every: flags.eval_every.unwrap_or(1000),
            seed: flags.seed.unwrap_or(0),
            threads: flags.threads,
            local_tolerance: flags.local_tolerance.unwrap_or(1e-3 * tolerance_scale as f64),
            local_max_sweeps: flags.local_max_sweeps.unwrap_or(100),
            heldout_fraction: flags.heldout_fraction.unwrap_or(DEFAULT_HELDOUT_FRACTION),
            batch: flags.batch,
        };
        config.validate()?;
        config.absolutize()?;
        Ok(config)
    }
}

impl RunConfig {
    /// Check ranges through the library constructors and that inputs exist.
    pub fn validate(&self) -> Result<(), CliError> {
        match self.model {
            ModelKind::Lda => drop(self.lda()?),
            ModelKind::Hdp => drop(self.hdp()?),
        }
        StepSchedule::new(self.tau, self.kappa)?;
        if self.batch_size == 0 {
            return Err(CliError::config("batch-size must be positive"));
        }
        if !(self.local_tolerance > 0.0 && self.local_tolerance.is_finite()) || self.local_max_sweeps == 0 {
            return Err(CliError::config("local-tolerance and local-max-sweeps must be positive"));
        }
        if !(self.heldout_fraction > 0.0 && self.heldout_fraction < 1.0) {
            return Err(CliError::config("heldout-fraction must lie in (0, 1)"));
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads must be positive"));
        }
        for path in [Some(&self.corpus), Some(&self.vocab), self.test.as_ref()].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::config(format!("input file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Make every path absolute so a resumed run finds its inputs from any
    /// working directory.
    fn absolutize(&mut self) -> Result<(), CliError> {
        for path in [Some(&mut self.corpus), Some(&mut self.vocab), self.test.as_mut(), Some(&mut self.out)]
            .into_iter()
            .flatten()
        {
            *path = std::path::absolute(&*path).map_err(|e| io_at(path, e))?;
        }
        Ok(())
    }

    pub fn lda(&self) -> Result<LdaConfig, CliError> {
        Ok(LdaConfig::new(self.k, self.alpha, self.eta)?)
    }

    pub fn hdp(&self) -> Result<HdpConfig, CliError> {
        Ok(HdpConfig::new(self.k, self.t, self.alpha, self.omega, self.eta)?)
    }

    pub fn svi(&self) -> Result<SviConfig, CliError> {
        Ok(SviConfig {
            schedule: StepSchedule::new(self.tau, self.kappa)?,
            minibatch_size: self.batch_size,
            max_iterations: self.iterations,
            local_tolerance: self.local_tolerance,
            local_max_sweeps: self.local_max_sweeps,
            seed: self.seed,
            sample_with_replacement: false,
        })
    }

    /// The configuration as a config file that resolves back to itself.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model", &self.model.name());
        put("corpus", &self.corpus.display());
        put("vocab", &self.vocab.display());
        if let Some(test) = &self.test {
            put("test", &test.display());
        }
        put("out", &self.out.display());
        put("k", &self.k);
        if self.model == ModelKind::Hdp {
            put("t", &self.t);
            put("omega", &self.omega);
        }
        put("alpha", &self.alpha);
        put("eta", &self.eta);
        put("kappa", &self.kappa);
        put("tau", &self.tau);
        put("batch-size", &self.batch_size);
        put("iterations", &self.iterations);
        put("eval-every", &self.eval_every);
        put("seed", &self.seed);
        if let Some(n) = self.threads {
            put("threads", &n);
        }
        put("local-tolerance", &self.local_tolerance);
        put("local-max-sweeps", &self.local_max_sweeps);
        put("heldout-fraction", &self.heldout_fraction);
        put("batch", &self.batch);
        s
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("config.txt");
        fs::write(&path, self.to_config_text()).map_err(|e| io_at(&path, e))
    }
}
