//! Batched successive elimination with pluggable uplink quantization.
//!
//! Every algorithm shares the same loop: in round `i` each active agent pulls
//! its arm `b_i` times, reports an estimate of its empirical mean, the learner
//! turns the reports into confidence intervals of a common width, and arms
//! whose UCB does not exceed the best LCB among active arms are dropped.
//! They differ only in how the mean crosses the channel and how wide the
//! resulting interval must be.

mod engine;
pub mod fed_sel;
pub mod quban;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::confidence::ArmBelief;
use crate::error::{param, Result};
use crate::protocol::UplinkMessage;
use crate::quantizer::{Interval, MAX_BITS};

pub use engine::AgentState;

pub const DEFAULT_MAX_ROUNDS: u32 = 60;

/// Grid step of the first-round quantizer for unbounded rewards.
pub const BOOTSTRAP_EPSILON: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Algorithm {
    IcqSe,
    UnquantizedSe,
    FedSel,
    QubanSe { epsilon: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::IcqSe => "icq-se",
            Algorithm::UnquantizedSe => "se",
            Algorithm::FedSel => "fed-sel",
            Algorithm::QubanSe { .. } => "quban-se",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub delta: f64,
    pub bits: u32,
    pub alpha: u64,
    pub algorithm: Algorithm,
    pub max_rounds: u32,
    pub seed: u64,
    /// Run ICQ-SE with `alpha >= 4^B`, outside the range its bounds cover.
    pub allow_unproven_alpha: bool,
}

impl TrialConfig {
    pub fn new(algorithm: Algorithm, delta: f64, bits: u32, alpha: u64) -> Self {
        Self {
            delta,
            bits,
            alpha,
            algorithm,
            max_rounds: DEFAULT_MAX_ROUNDS,
            seed: 0,
            allow_unproven_alpha: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.alpha < 2 {
            return Err(param(format!("alpha must be >= 2, got {}", self.alpha)));
        }
        if self.max_rounds == 0 {
            return Err(param("max_rounds must be >= 1"));
        }
        match self.algorithm {
            Algorithm::IcqSe => {
                if self.bits == 0 || self.bits > MAX_BITS {
                    return Err(param(format!("B must be in 1..={MAX_BITS}, got {}", self.bits)));
                }
                if !self.allow_unproven_alpha && !alpha_within_proven_range(self.alpha, self.bits) {
                    return Err(param(format!(
                        "ICQ-SE needs alpha < 4^B, got alpha={} with B={}",
                        self.alpha, self.bits
                    )));
                }
            }
            Algorithm::QubanSe { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(param(format!("epsilon must be positive, got {epsilon}")));
                }
            }
            Algorithm::UnquantizedSe | Algorithm::FedSel => {}
        }
        Ok(())
    }

    /// Display label, also used as the `algorithm` column of sweep output.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::IcqSe => format!("ICQ-SE(B={})", self.bits),
            Algorithm::UnquantizedSe => "SE".to_string(),
            Algorithm::FedSel => "Fed-SEL".to_string(),
            Algorithm::QubanSe { epsilon } => format!("QuBan-SE(eps={epsilon})"),
        }
    }
}

/// `alpha < 2^(2B)`.
pub fn alpha_within_proven_range(alpha: u64, bits: u32) -> bool {
    2 * bits >= 64 || alpha < 1u64 << (2 * bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// One arm left.
    Identified,
    RoundCap,
    /// The next round's pull count does not fit in 64 bits.
    ScheduleOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Total arm pulls across all agents.
    pub samples: u64,
    pub rounds: u32,
    /// Total uplink payload bits; `None` when the algorithm sends raw reals.
    pub uplink_bits: Option<u64>,
    pub messages: u64,
    pub recommended: Option<usize>,
    pub correct: bool,
    pub best_eliminated: bool,
    pub stop: StopReason,
}

impl TrialMetrics {
    pub fn is_conclusive(&self) -> bool {
        self.stop == StopReason::Identified
    }

    pub fn is_wrong(&self) -> bool {
        self.is_conclusive() && !self.correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRound {
    pub arm: usize,
    pub mu_hat: f64,
    pub mu_tilde: f64,
    /// Quantization interval as computed by the agent.
    pub agent_interval: Option<Interval>,
    /// Quantization interval as computed by the learner.
    pub learner_interval: Option<Interval>,
    pub payload_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub t: u64,
    pub pulls: u64,
    pub u_prime: f64,
    pub u: f64,
    pub arms: Vec<ArmRound>,
    pub active_after: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub means: Vec<f64>,
    /// Learner's estimates before round 1.
    pub initial: Vec<f64>,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trajectory: bool,
    pub wire_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub metrics: TrialMetrics,
    pub trajectory: Option<Trajectory>,
    pub wire_log: Option<Vec<UplinkMessage>>,
}

/// One elimination step: keep the arms of `active` whose UCB is strictly
/// above the largest LCB in `active`.
pub fn eliminate(active: &[usize], beliefs: &[ArmBelief]) -> Vec<usize> {
    let Some(max_lcb) = active.iter().map(|&j| beliefs[j].lcb).reduce(f64::max) else {
        return Vec::new();
    };
    let kept: Vec<usize> = active.iter().copied().filter(|&m| beliefs[m].ucb > max_lcb).collect();
    debug_assert!(!kept.is_empty());
    kept
}

pub fn run_detailed(
    instance: &BanditInstance,
    config: &TrialConfig,
    options: RunOptions,
) -> Result<TrialOutput> {
    engine::run(instance, config, options)
}

pub fn run_trial(instance: &BanditInstance, config: &TrialConfig) -> Result<TrialMetrics> {
    Ok(run_detailed(instance, config, RunOptions::default())?.metrics)
}

fn run_as(instance: &BanditInstance, config: &TrialConfig, algorithm: Algorithm) -> Result<TrialOutput> {
    let config = TrialConfig { algorithm, ..config.clone() };
    run_detailed(instance, &config, RunOptions { trajectory: true, wire_log: false })
}

pub fn run_icq_se(instance: &BanditInstance, config: &TrialConfig) -> Result<(TrialMetrics, Trajectory)> {
    let out = run_as(instance, config, Algorithm::IcqSe)?;
    Ok((out.metrics, out.trajectory.expect("trajectory requested")))
}

pub fn run_se_unquantized(instance: &BanditInstance, config: &TrialConfig) -> Result<TrialMetrics> {
    Ok(run_as(instance, config, Algorithm::UnquantizedSe)?.metrics)
}

pub fn run_fed_sel(instance: &BanditInstance, config: &TrialConfig) -> Result<TrialMetrics> {
    Ok(run_as(instance, config, Algorithm::FedSel)?.metrics)
}

pub fn run_quban_se(instance: &BanditInstance, config: &TrialConfig, epsilon: f64) -> Result<TrialMetrics> {
    Ok(run_as(instance, config, Algorithm::QubanSe { epsilon })?.metrics)
}

impl fmt::Display for TrialMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = self.uplink_bits.map_or_else(|| "-".to_string(), |b| b.to_string());
        let rec = self.recommended.map_or_else(|| "-".to_string(), |r| r.to_string());
        write!(
            f,
            "samples={} rounds={} bits={} recommended={} correct={} stop={:?}",
            self.samples, self.rounds, bits, rec, self.correct, self.stop
        )
    }
}
