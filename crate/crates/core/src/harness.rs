//! Monte Carlo sweeps over one parameter axis, with CSV output.
//!
//! Trial `n` of every sweep point uses seed `mix(base_seed, n)` for both the
//! instance and the run, so algorithms at the same point are compared on
//! identical instances and reward streams.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_trial, Algorithm, TrialConfig, TrialMetrics};
use crate::bandit::{make_instance, InstanceKind};
use crate::error::{param, Error, Result};
use crate::rng::mix;

pub const DEFAULT_TRIALS: usize = 4000;
pub const DEFAULT_ARMS: usize = 5;

/// `ln(1/delta)` at delta = 1/20, 1/100, 1/200, ..., 1/10^6.
pub const LOG_INV_DELTA_GRID: [f64; 10] = [
    2.99573227355399,
    4.60517018598809,
    5.29831736654804,
    6.90775527898214,
    7.60090245954208,
    9.21034037197618,
    9.90348755253613,
    11.5129254649702,
    12.2060726455302,
    13.8155105579643,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BetaRandom,
    GaussianRandomMeans,
    GaussianHardness,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::BetaRandom => "beta-random",
            Family::GaussianRandomMeans => "gaussian-random-means",
            Family::GaussianHardness => "gaussian-hardness",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "beta" | "beta-random" => Ok(Family::BetaRandom),
            "gaussian" | "gaussian-random-means" => Ok(Family::GaussianRandomMeans),
            "hardness" | "gaussian-hardness" => Ok(Family::GaussianHardness),
            other => Err(param(format!("unknown family {other:?}"))),
        }
    }

    pub fn kind(&self, gap: f64) -> InstanceKind {
        match self {
            Family::BetaRandom => InstanceKind::BetaRandom,
            Family::GaussianRandomMeans => InstanceKind::GaussianRandomMeans,
            Family::GaussianHardness => InstanceKind::GaussianHardness { gap },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XAxis {
    LogInvDelta,
    Delta,
    Alpha,
    Bits,
}

impl XAxis {
    pub fn name(&self) -> &'static str {
        match self {
            XAxis::LogInvDelta => "log_inv_delta",
            XAxis::Delta => "gap",
            XAxis::Alpha => "alpha",
            XAxis::Bits => "B",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: Family,
    pub arms: usize,
    /// Gap of the hardness family when the x axis is not the gap.
    pub gap: f64,
    pub x_axis: XAxis,
    pub x_values: Vec<f64>,
    /// Templates; the swept parameter overrides the matching field.
    pub algorithms: Vec<TrialConfig>,
    pub n_trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: String,
    pub algorithm: String,
    pub x_name: String,
    pub x: f64,
    pub n_trials: usize,
    pub mean_samples: f64,
    pub mean_rounds: f64,
    pub mean_bits: Option<f64>,
    pub error_rate: f64,
    pub inconclusive_rate: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(param("n_trials must be >= 1"));
        }
        if self.x_values.is_empty() {
            return Err(param("x_values must be nonempty"));
        }
        if self.x_values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(param("x_values must be sorted"));
        }
        if self.algorithms.is_empty() {
            return Err(param("no algorithms to run"));
        }
        Ok(())
    }

    /// The template with the swept parameter set to `x`.
    pub fn config_at(&self, template: &TrialConfig, x: f64) -> Result<TrialConfig> {
        let mut config = template.clone();
        match self.x_axis {
            XAxis::LogInvDelta => config.delta = (-x).exp(),
            XAxis::Alpha => config.alpha = integral(x, "alpha")?,
            XAxis::Bits => config.bits = integral(x, "B")? as u32,
            XAxis::Delta => {}
        }
        config.validate()?;
        Ok(config)
    }

    pub fn instance_kind_at(&self, x: f64) -> InstanceKind {
        match self.x_axis {
            XAxis::Delta => self.family.kind(x),
            _ => self.family.kind(self.gap),
        }
    }
}

fn integral(x: f64, what: &str) -> Result<u64> {
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(param(format!("{what} must be a small nonnegative integer, got {x}")));
    }
    Ok(x as u64)
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    mix(base_seed, trial as u64)
}

/// Run every trial of one sweep point, in trial order.
pub fn run_point(spec: &SweepSpec, template: &TrialConfig, x: f64) -> Result<Vec<TrialMetrics>> {
    let config = spec.config_at(template, x)?;
    run_trials(spec.instance_kind_at(x), spec.arms, &config, spec.n_trials, spec.base_seed, x)
}

/// `n_trials` seeded trials of `config` on fresh instances of `kind`; `x` is
/// only used to label errors.
pub fn run_trials(
    kind: InstanceKind,
    arms: usize,
    config: &TrialConfig,
    n_trials: usize,
    base_seed: u64,
    x: f64,
) -> Result<Vec<TrialMetrics>> {
    let label = config.label();
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(base_seed, trial);
            let context = |source: Error| Error::Trial {
                x,
                algorithm: label.clone(),
                trial,
                seed,
                source: Box::new(source),
            };
            let instance = make_instance(kind, arms, seed).map_err(context)?;
            run_trial(&instance, &TrialConfig { seed, ..config.clone() }).map_err(context)
        })
        .collect()
}

/// Average `trials`; means are over conclusive trials, rates over all.
pub fn aggregate(
    family: Family,
    x_axis: XAxis,
    x: f64,
    config: &TrialConfig,
    trials: &[TrialMetrics],
) -> SweepResult {
    let n = trials.len();
    let conclusive: Vec<&TrialMetrics> = trials.iter().filter(|m| m.is_conclusive()).collect();
    let mean = |f: &dyn Fn(&TrialMetrics) -> f64| {
        if conclusive.is_empty() {
            f64::NAN
        } else {
            conclusive.iter().map(|m| f(m)).sum::<f64>() / conclusive.len() as f64
        }
    };
    let mean_bits = (config.algorithm != Algorithm::UnquantizedSe)
        .then(|| mean(&|m| m.uplink_bits.unwrap_or(0) as f64));
    SweepResult {
        family: family.name().to_string(),
        algorithm: config.label(),
        x_name: x_axis.name().to_string(),
        x,
        n_trials: n,
        mean_samples: mean(&|m| m.samples as f64),
        mean_rounds: mean(&|m| m.rounds as f64),
        mean_bits,
        error_rate: trials.iter().filter(|m| m.is_wrong()).count() as f64 / n as f64,
        inconclusive_rate: (n - conclusive.len()) as f64 / n as f64,
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepResult>> {
    spec.validate()?;
    let mut out = Vec::new();
    for &x in &spec.x_values {
        for template in &spec.algorithms {
            let trials = run_point(spec, template, x)?;
            let config = spec.config_at(template, x)?;
            let row = aggregate(spec.family, spec.x_axis, x, &config, &trials);
            log::info!(
                "{} {}={} {}: samples={:.2} rounds={:.3} error={:.4}",
                row.family, row.x_name, x, row.algorithm, row.mean_samples, row.mean_rounds, row.error_rate
            );
            out.push(row);
        }
    }
    Ok(out)
}

pub fn write_csv_to<W: std::io::Write>(results: &[SweepResult], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "family",
        "algorithm",
        "x_name",
        "x",
        "n_trials",
        "mean_samples",
        "mean_rounds",
        "mean_bits",
        "error_rate",
        "inconclusive_rate",
    ])?;
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(results: &[SweepResult], path: &Path) -> Result<()> {
    write_csv_to(results, std::fs::File::create(path)?)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepResult>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn with_delta(algorithm: Algorithm, bits: u32, delta: f64) -> TrialConfig {
    TrialConfig::new(algorithm, delta, bits, 2)
}

/// Algorithms compared in the delta and gap sweeps; Fed-SEL only when the
/// rewards are bounded.
pub fn comparison_algorithms(family: Family, delta: f64) -> Vec<TrialConfig> {
    let mut v = vec![
        with_delta(Algorithm::UnquantizedSe, 0, delta),
        with_delta(Algorithm::QubanSe { epsilon: 0.5 }, 0, delta),
        with_delta(Algorithm::QubanSe { epsilon: 2.0 }, 0, delta),
        with_delta(Algorithm::IcqSe, 2, delta),
        with_delta(Algorithm::IcqSe, 3, delta),
    ];
    if family == Family::BetaRandom {
        v.push(with_delta(Algorithm::FedSel, 0, delta));
    }
    v
}

pub fn delta_sweep(family: Family, n_trials: usize, base_seed: u64) -> SweepSpec {
    SweepSpec {
        family,
        arms: DEFAULT_ARMS,
        gap: 0.5,
        x_axis: XAxis::LogInvDelta,
        x_values: LOG_INV_DELTA_GRID.to_vec(),
        algorithms: comparison_algorithms(family, 0.1),
        n_trials,
        base_seed,
    }
}

/// 20 evenly spaced gaps from 0.1 to 1.
pub fn hardness_grid() -> Vec<f64> {
    (0..20).map(|i| 0.1 + 0.9 * i as f64 / 19.0).collect()
}

pub fn hardness_sweep(delta: f64, n_trials: usize, base_seed: u64) -> SweepSpec {
    SweepSpec {
        family: Family::GaussianHardness,
        arms: DEFAULT_ARMS,
        gap: 0.5,
        x_axis: XAxis::Delta,
        x_values: hardness_grid(),
        algorithms: comparison_algorithms(Family::GaussianHardness, delta),
        n_trials,
        base_seed,
    }
}

/// ICQ-SE at one bit per message for alpha = 2..=9. Only alpha = 2, 3 lie in
/// the range the bounds cover, so the rest run with the check relaxed.
pub fn alpha_sweep(delta: f64, n_trials: usize, base_seed: u64) -> SweepSpec {
    let mut config = with_delta(Algorithm::IcqSe, 1, delta);
    config.allow_unproven_alpha = true;
    SweepSpec {
        family: Family::BetaRandom,
        arms: DEFAULT_ARMS,
        gap: 0.5,
        x_axis: XAxis::Alpha,
        x_values: (2..=9).map(f64::from).collect(),
        algorithms: vec![config],
        n_trials,
        base_seed,
    }
}

pub fn bits_sweep(delta: f64, n_trials: usize, base_seed: u64) -> SweepSpec {
    SweepSpec {
        family: Family::BetaRandom,
        arms: DEFAULT_ARMS,
        gap: 0.5,
        x_axis: XAxis::Bits,
        x_values: (1..=9).map(f64::from).collect(),
        algorithms: vec![with_delta(Algorithm::IcqSe, 1, delta)],
        n_trials,
        base_seed,
    }
}
