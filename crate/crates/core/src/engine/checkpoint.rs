//! Versioned JSON checkpoints.
//!
//! A checkpoint records the loop configuration, both counters, the exact
//! position of the sampling generator, and every global block. Floats are
//! written in their shortest round-trip form, so restoring a checkpoint
//! reproduces the interrupted run bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::blocks::GlobalBlock;
use super::driver::{GlobalState, SviState};
use super::SviConfig;
use crate::error::{Error, Result};
use crate::random::SeededRng;

pub const CHECKPOINT_FORMAT: &str = "svi-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializable position of a ChaCha generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub algorithm: String,
    /// 32-byte key, lowercase hex.
    pub seed: String,
    pub stream: u64,
    /// Word position as a decimal string (it is a 128-bit counter).
    pub word_pos: String,
}

impl RngSnapshot {
    pub fn capture(rng: &SeededRng) -> Self {
        let seed = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            algorithm: "chacha8".to_string(),
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<SeededRng> {
        let bad = |m: &str| Error::Checkpoint(format!("rng snapshot: {m}"));
        if self.algorithm != "chacha8" {
            return Err(bad(&format!("unsupported algorithm {}", self.algorithm)));
        }
        if self.seed.len() != 64 {
            return Err(bad("seed must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, byte) in seed.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad("seed is not hex"))?;
        }
        let word_pos: u128 = self.word_pos.parse().map_err(|_| bad("invalid word position"))?;
        let mut rng = SeededRng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: SviConfig,
    /// Free-form description of the model and run, supplied by the caller.
    pub run: serde_json::Value,
    pub iteration: u64,
    pub documents_seen: u64,
    pub rng: RngSnapshot,
    pub hyperparameters: BTreeMap<String, f64>,
    pub blocks: Vec<GlobalBlock>,
}

impl Checkpoint {
    pub fn capture(config: &SviConfig, run: serde_json::Value, state: &SviState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: *config,
            run,
            iteration: state.iteration,
            documents_seen: state.documents_seen,
            rng: RngSnapshot::capture(&state.rng),
            hyperparameters: state.globals.hyperparameters.clone(),
            blocks: state.globals.blocks.clone(),
        }
    }

    pub fn restore(&self) -> Result<SviState> {
        Ok(SviState {
            globals: GlobalState {
                blocks: self.blocks.clone(),
                hyperparameters: self.hyperparameters.clone(),
            },
            iteration: self.iteration,
            documents_seen: self.documents_seen,
            rng: self.rng.restore()?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if cp.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("not a checkpoint (format {:?})", cp.format)));
        }
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", cp.version)));
        }
        Ok(cp)
    }

    /// Write via a temporary file and rename, so a failed write leaves any
    /// previous checkpoint intact.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json()?.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StepSchedule;
    use rand::Rng;

    #[test]
    fn rng_position_survives_a_round_trip() {
        let mut rng = crate::random::seeded_rng(42, 1);
        for _ in 0..37 {
            let _: u32 = rng.random();
        }
        let mut restored = RngSnapshot::capture(&rng).restore().unwrap();
        let a: Vec<u64> = (0..10).map(|_| rng.random()).collect();
        let b: Vec<u64> = (0..10).map(|_| restored.random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn state_round_trips_bitwise() {
        let config = SviConfig {
            schedule: StepSchedule::new(1.0, 0.7).unwrap(),
            minibatch_size: 3,
            max_iterations: 10,
            local_tolerance: 1e-3,
            local_max_sweeps: 50,
            seed: 7,
            sample_with_replacement: false,
        };
        let mut state = SviState::new(
            GlobalState::new(vec![GlobalBlock::new("lambda[0]", vec![0.1 + 0.2, 1.0 / 3.0, 1e-300, 12345.678901234567])]),
            7,
        );
        state.iteration = 4;
        state.documents_seen = 12;
        state.globals.hyperparameters.insert("alpha".into(), std::f64::consts::PI);
        let cp = Checkpoint::capture(&config, serde_json::json!({"model": "lda"}), &state);
        let back = Checkpoint::from_json(&cp.to_json().unwrap()).unwrap();
        assert_eq!(back, cp);
        let restored = back.restore().unwrap();
        assert_eq!(restored, state);
        for (a, b) in restored.globals.blocks[0].params.iter().zip(&state.globals.blocks[0].params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(Checkpoint::from_json("{}").is_err());
        assert!(Checkpoint::from_json("not json").is_err());
    }
}
