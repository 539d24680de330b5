//! File-based settings for the `icq` command line tool.
//!
//! A TOML file may hold any subset of these keys; flags given on the command
//! line take precedence.
//!
//! ```toml
//! family = "beta"          # beta | gaussian | hardness
//! gap = 0.5                # hardness family only
//! arms = 5
//! algorithm = "icq-se"     # icq-se | se | fed-sel | quban-se
//! bits = 3
//! alpha = 2
//! delta = 0.05
//! epsilon = 0.5            # quban-se only
//! trials = 4000
//! seed = 7
//! max_rounds = 60
//! allow_unproven_alpha = false
//! out = "results.csv"
//! dump_wire = "wire.bin"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, TrialConfig, DEFAULT_MAX_ROUNDS};
use crate::error::{param, Result};
use crate::harness::{Family, DEFAULT_ARMS, DEFAULT_TRIALS};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    pub gap: Option<f64>,
    pub arms: Option<usize>,
    pub algorithm: Option<String>,
    pub bits: Option<u32>,
    pub alpha: Option<u64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub max_rounds: Option<u32>,
    pub allow_unproven_alpha: Option<bool>,
    pub out: Option<PathBuf>,
    pub dump_wire: Option<PathBuf>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| param(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn merge(self, over: FileConfig) -> FileConfig {
        FileConfig {
            family: over.family.or(self.family),
            gap: over.gap.or(self.gap),
            arms: over.arms.or(self.arms),
            algorithm: over.algorithm.or(self.algorithm),
            bits: over.bits.or(self.bits),
            alpha: over.alpha.or(self.alpha),
            delta: over.delta.or(self.delta),
            epsilon: over.epsilon.or(self.epsilon),
            trials: over.trials.or(self.trials),
            seed: over.seed.or(self.seed),
            max_rounds: over.max_rounds.or(self.max_rounds),
            allow_unproven_alpha: over.allow_unproven_alpha.or(self.allow_unproven_alpha),
            out: over.out.or(self.out),
            dump_wire: over.dump_wire.or(self.dump_wire),
        }
    }

    pub fn resolve(&self) -> Result<RunSettings> {
        let family = Family::parse(self.family.as_deref().unwrap_or("beta"))?;
        let algorithm = parse_algorithm(self.algorithm.as_deref().unwrap_or("icq-se"), self.epsilon)?;
        let mut trial = TrialConfig::new(
            algorithm,
            self.delta.unwrap_or(0.05),
            self.bits.unwrap_or(3),
            self.alpha.unwrap_or(2),
        );
        trial.max_rounds = self.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS);
        trial.allow_unproven_alpha = self.allow_unproven_alpha.unwrap_or(false);
        trial.validate()?;
        let settings = RunSettings {
            family,
            gap: self.gap.unwrap_or(0.5),
            arms: self.arms.unwrap_or(DEFAULT_ARMS),
            trial,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
            dump_wire: self.dump_wire.clone(),
        };
        if settings.trials == 0 {
            return Err(param("trials must be >= 1"));
        }
        Ok(settings)
    }
}

/// `icq-se`, `se`, `fed-sel`, or `quban-se` (with `epsilon`, default 2).
pub fn parse_algorithm(name: &str, epsilon: Option<f64>) -> Result<Algorithm> {
    match name {
        "icq-se" | "icq" => Ok(Algorithm::IcqSe),
        "se" | "unquantized" | "unquantized-se" => Ok(Algorithm::UnquantizedSe),
        "fed-sel" => Ok(Algorithm::FedSel),
        "quban-se" | "quban" => Ok(Algorithm::QubanSe { epsilon: epsilon.unwrap_or(2.0) }),
        other => Err(param(format!("unknown algorithm {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub family: Family,
    pub gap: f64,
    pub arms: usize,
    pub trial: TrialConfig,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub dump_wire: Option<PathBuf>,
}
