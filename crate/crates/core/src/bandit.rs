//! Bandit instances and reward sampling.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantizer::Interval;
use crate::rng;

/// Batches up to this size are drawn sample by sample. Larger Beta batches are
/// drawn as one moment-matched normal sum clamped to the support.
pub const EXACT_BATCH_LIMIT: u64 = 256;

/// Standard deviation of the Gaussian experiment families.
pub const GAUSSIAN_STD: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardModel {
    /// `Beta(gamma, 1 - gamma)` on `[0, 1]`, mean `gamma`.
    BoundedBeta { gamma: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl RewardModel {
    pub fn beta(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(param(format!("Beta gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self::BoundedBeta { gamma })
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() || !(std > 0.0 && std.is_finite()) {
            return Err(param(format!("Gaussian needs finite mean and std > 0, got ({mean}, {std})")));
        }
        Ok(Self::Gaussian { mean, std })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::BoundedBeta { gamma } => gamma,
            Self::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            // Beta(a, b): ab / ((a+b)^2 (a+b+1)) with a + b = 1
            Self::BoundedBeta { gamma } => gamma * (1.0 - gamma) / 2.0,
            Self::Gaussian { std, .. } => std * std,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::BoundedBeta { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::BoundedBeta { gamma } => {
                let d = Beta::new(gamma, 1.0 - gamma).expect("validated at construction");
                d.sample(rng).clamp(0.0, 1.0)
            }
            Self::Gaussian { mean, std } => {
                Normal::new(mean, std).expect("validated at construction").sample(rng)
            }
        }
    }

    /// Sum of `n` i.i.d. draws.
    ///
    /// Gaussian sums are drawn exactly as one normal variate. Beta sums are
    /// exact up to [`EXACT_BATCH_LIMIT`] and normal-approximated (clamped to
    /// `[0, n]`) beyond it.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match *self {
            Self::Gaussian { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                n as f64 * mean + (n as f64).sqrt() * std * z
            }
            Self::BoundedBeta { gamma } if n <= EXACT_BATCH_LIMIT => {
                let d = Beta::new(gamma, 1.0 - gamma).expect("validated at construction");
                (0..n).map(|_| d.sample(rng).clamp(0.0, 1.0)).sum()
            }
            Self::BoundedBeta { gamma } => {
                let z: f64 = StandardNormal.sample(rng);
                let nf = n as f64;
                (nf * gamma + (nf * self.variance()).sqrt() * z).clamp(0.0, nf)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    models: Vec<RewardModel>,
    means: Vec<f64>,
    sigma_cb: f64,
    support: Option<Interval>,
}

impl BanditInstance {
    pub fn new(models: Vec<RewardModel>, sigma_cb: f64, support: Option<Interval>) -> Result<Self> {
        if models.len() < 2 {
            return Err(param(format!("need at least 2 arms, got {}", models.len())));
        }
        if !(sigma_cb > 0.0 && sigma_cb.is_finite()) {
            return Err(param(format!("sigma_cb must be positive, got {sigma_cb}")));
        }
        let all_bounded = models.iter().all(RewardModel::is_bounded);
        match (&support, all_bounded) {
            (Some(_), false) => return Err(param("support given but some arm is unbounded")),
            (None, true) => return Err(param("bounded arms need a declared support")),
            _ => {}
        }
        let means: Vec<f64> = models.iter().map(RewardModel::mean).collect();
        if let Some(iv) = &support {
            if let Some(m) = means.iter().find(|&&m| !iv.contains(m)) {
                return Err(param(format!("mean {m} outside support {iv}")));
            }
        }
        Ok(Self { models, means, sigma_cb, support })
    }

    pub fn k(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[RewardModel] {
        &self.models
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma_cb(&self) -> f64 {
        self.sigma_cb
    }

    pub fn support(&self) -> Option<Interval> {
        self.support
    }

    pub fn is_bounded(&self) -> bool {
        self.support.is_some()
    }

    pub fn max_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The unique arm with the largest mean, or `None` when several tie.
    pub fn best_arm(&self) -> Option<usize> {
        let top = self.max_mean();
        let mut winners = self.means.iter().enumerate().filter(|(_, &m)| m == top);
        let (first, _) = winners.next()?;
        winners.next().is_none().then_some(first)
    }

    /// No unique best arm.
    pub fn is_degenerate(&self) -> bool {
        self.best_arm().is_none()
    }

    pub fn is_optimal(&self, arm: usize) -> bool {
        self.means.get(arm).is_some_and(|&m| m == self.max_mean())
    }

    pub fn gaps(&self) -> Vec<f64> {
        gaps(&self.means)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        self.model(arm).map(|m| m.sample(rng))
    }

    pub fn sample_batch_sum<R: Rng + ?Sized>(&self, arm: usize, n: u64, rng: &mut R) -> Result<f64> {
        self.model(arm).map(|m| m.sample_sum(n, rng))
    }

    fn model(&self, arm: usize) -> Result<&RewardModel> {
        self.models.get(arm).ok_or(Error::ArmOutOfRange { arm, k: self.k() })
    }
}

/// Suboptimality gaps `max_k mu_k - mu_j`.
pub fn gaps(means: &[f64]) -> Vec<f64> {
    let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    means.iter().map(|&m| top - m).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InstanceKind {
    /// Beta(gamma, 1 - gamma) arms with gamma ~ U(0, 1).
    BetaRandom,
    /// Gaussian arms (std 0.125) with means uniform between 0 and N ~ N(0, 9).
    GaussianRandomMeans,
    /// K - 1 Gaussian arms at mean 0 and one at mean `gap`, std 0.125.
    GaussianHardness { gap: f64 },
}

pub fn make_instance(kind: InstanceKind, k: usize, seed: u64) -> Result<BanditInstance> {
    if k < 2 {
        return Err(param(format!("need at least 2 arms, got {k}")));
    }
    let mut rng = rng::stream(seed, rng::INSTANCE_STREAM);
    match kind {
        InstanceKind::BetaRandom => {
            let models = (0..k)
                .map(|_| {
                    let gamma = loop {
                        let g: f64 = rng.random();
                        if g > 0.0 && g < 1.0 {
                            break g;
                        }
                    };
                    RewardModel::beta(gamma)
                })
                .collect::<Result<Vec<_>>>()?;
            // Hoeffding: a [0, 1]-valued variable is (1/2)^2-subgaussian.
            BanditInstance::new(models, 0.5, Some(Interval::new(0.0, 1.0)?))
        }
        InstanceKind::GaussianRandomMeans => {
            let n: f64 = rng.sample::<f64, _>(StandardNormal) * 3.0;
            let (lo, hi) = if n < 0.0 { (n, 0.0) } else { (0.0, n) };
            let models = (0..k)
                .map(|_| {
                    let u: f64 = rng.random();
                    RewardModel::gaussian(lo + u * (hi - lo), GAUSSIAN_STD)
                })
                .collect::<Result<Vec<_>>>()?;
            BanditInstance::new(models, GAUSSIAN_STD, None)
        }
        InstanceKind::GaussianHardness { gap } => {
            if !(0.0..=1.0).contains(&gap) {
                return Err(param(format!("hardness gap must lie in [0, 1], got {gap}")));
            }
            let best = rng.random_range(0..k);
            let models = (0..k)
                .map(|j| RewardModel::gaussian(if j == best { gap } else { 0.0 }, GAUSSIAN_STD))
                .collect::<Result<Vec<_>>>()?;
            BanditInstance::new(models, GAUSSIAN_STD, None)
        }
    }
}
