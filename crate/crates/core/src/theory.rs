//! Closed-form constants and complexity bounds for ICQ-SE, with brute-force
//! oracles to check them against.

use std::f64::consts::E;

use serde::Serialize;

use crate::algorithms::alpha_within_proven_range;
use crate::confidence::u_prime_real;
use crate::error::{param, Error, Result};

/// Rounds searched by [`t_j_oracle`] before giving up.
pub const TJ_SEARCH_ROUNDS: u32 = 1000;

fn check_alpha(bits: u32, alpha: u64) -> Result<()> {
    if bits == 0 || alpha < 2 {
        return Err(param(format!("need B >= 1 and alpha >= 2, got B={bits}, alpha={alpha}")));
    }
    if !alpha_within_proven_range(alpha, bits) {
        return Err(Error::Domain(format!("alpha={alpha} is not below 4^B for B={bits}")));
    }
    Ok(())
}

fn c_with(lead: f64, bits: u32, alpha: u64) -> Result<f64> {
    check_alpha(bits, alpha)?;
    let q = 2f64.powi(bits as i32);
    Ok((1.0 + lead / q) * q / (q - (alpha as f64).sqrt()))
}

/// `c = (1 + 2/2^B) 2^B / (2^B - sqrt(alpha))`, so that `U <= 2c U'`.
pub fn c_constant(bits: u32, alpha: u64) -> Result<f64> {
    c_with(2.0, bits, alpha)
}

/// The same constant with `(1 + 1/2^B)` in front; still sufficient for
/// `U <= 2c U'`.
pub fn c_constant_tight(bits: u32, alpha: u64) -> Result<f64> {
    c_with(1.0, bits, alpha)
}

/// `4 K alpha^2 exp(-(b-a)^2 / (2 sigma^2))`: the bounds hold for `delta`
/// below this value.
pub fn delta_max(k: usize, alpha: u64, width: f64, sigma: f64) -> f64 {
    let a = alpha as f64;
    4.0 * k as f64 * a * a * (-(width * width) / (2.0 * sigma * sigma)).exp()
}

/// Lower branch of the Lambert W function: the root `x <= -1` of
/// `x e^x = y` for `-1/e <= y < 0`.
///
/// Bisects on `[e/(e-1) ln(-y) - 1, -1]`; the left end lies below the root
/// because `W_{-1}(y) > e/(e-1) ln(-y)`.
pub fn lambert_w_minus1(y: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if !(y >= branch && y < 0.0) {
        return Err(Error::Domain(format!("W_-1 is defined on [-1/e, 0), got {y}")));
    }
    if y == branch {
        return Ok(-1.0);
    }
    // x e^x - y is decreasing on (-inf, -1]: positive at lo, nonpositive at hi
    let mut lo = E / (E - 1.0) * (-y).ln() - 1.0;
    let mut hi = -1.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid * mid.exp() - y > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn log_term(lead: f64, log_scale: f64, alpha: u64, c: f64, gap: f64, sigma: f64, k: usize, delta: f64) -> (f64, bool) {
    let s = c * c * sigma * sigma / (gap * gap);
    let arg = log_scale * s * (4.0 * k as f64 * delta).sqrt();
    (lead * alpha as f64 * s * arg.ln() + 1.0, arg <= 1.0)
}

/// Per-arm sample term of the quantized bound:
/// `410 alpha c^2 sigma^2 / gap^2 * ln(256 c^2 sigma^2 sqrt(4 K delta) / gap^2) + 1`.
///
/// The second value is true when the log argument is at most 1, in which
/// case the term does not bound anything.
pub fn icq_arm_term(gap: f64, sigma: f64, k: usize, delta: f64, bits: u32, alpha: u64) -> Result<(f64, bool)> {
    let c = c_constant(bits, alpha)?;
    Ok(log_term(410.0, 256.0, alpha, c, gap, sigma, k, delta))
}

/// Per-arm sample term of the unquantized bound:
/// `102 alpha sigma^2 / gap^2 * ln(64 sigma^2 sqrt(4 K delta) / gap^2) + 1`.
pub fn se_arm_term(gap: f64, sigma: f64, k: usize, delta: f64, alpha: u64) -> (f64, bool) {
    log_term(102.0, 64.0, alpha, 1.0, gap, sigma, k, delta)
}

/// Smallest `t_i = alpha^i` (`i >= 1`) with `U'(i) <= gap / (8c)`.
pub fn t_j_oracle(gap: f64, sigma: f64, k: usize, delta: f64, bits: u32, alpha: u64) -> Result<u64> {
    if !(gap > 0.0) {
        return Err(param(format!("gap must be positive, got {gap}")));
    }
    let target = gap / (8.0 * c_constant(bits, alpha)?);
    let mut t = 1u64;
    for i in 1..=TJ_SEARCH_ROUNDS {
        t = t.checked_mul(alpha).ok_or_else(|| {
            Error::SearchExhausted(format!("alpha^{i} overflows before U' <= {target}"))
        })?;
        if u_prime_real(t as f64, delta, k, sigma)? <= target {
            return Ok(t);
        }
    }
    Err(Error::SearchExhausted(format!("no round up to {TJ_SEARCH_ROUNDS} reaches U' <= {target}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmBound {
    pub arm: usize,
    pub gap: f64,
    /// Quantized per-arm sample term.
    pub term: f64,
    /// Unquantized per-arm sample term.
    pub se_term: f64,
    pub t_j: Option<u64>,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bits: u32,
    pub alpha: u64,
    pub delta: f64,
    pub c: f64,
    pub c_tight: f64,
    pub delta_max: Option<f64>,
    /// `delta` is below `delta_max` (always true without a support).
    pub delta_ok: bool,
    pub sample_bound: f64,
    pub round_bound: f64,
    pub bit_bound: f64,
    pub se_sample_bound: f64,
    pub arms: Vec<ArmBound>,
}

impl BoundReport {
    pub fn per_arm_tj(&self) -> Vec<Option<u64>> {
        self.arms.iter().map(|a| a.t_j).collect()
    }
}

/// Evaluate the sample, round, and bit bounds for arms with the given gaps.
///
/// The first zero gap marks the best arm and is skipped; any further zero gap
/// makes every bound infinite.
#[allow(clippy::too_many_arguments)]
pub fn sample_bound(
    gaps: &[f64],
    sigma: f64,
    k: usize,
    delta: f64,
    bits: u32,
    alpha: u64,
    support_width: Option<f64>,
) -> Result<BoundReport> {
    let c = c_constant(bits, alpha)?;
    let c_tight = c_constant_tight(bits, alpha)?;
    let dmax = support_width.map(|w| delta_max(k, alpha, w, sigma));
    let best = gaps.iter().position(|&g| g == 0.0);

    let mut arms = Vec::new();
    let (mut samples, mut rounds, mut se_samples) = (0.0, 0.0, 0.0);
    for (arm, &gap) in gaps.iter().enumerate() {
        if Some(arm) == best {
            continue;
        }
        let (term, se_term, vacuous) = if gap > 0.0 {
            let (term, vacuous) = icq_arm_term(gap, sigma, k, delta, bits, alpha)?;
            (term, se_arm_term(gap, sigma, k, delta, alpha).0, vacuous)
        } else {
            (f64::INFINITY, f64::INFINITY, false)
        };
        if vacuous {
            log::warn!("bound for arm {arm} (gap {gap}) is vacuous: log argument <= 1");
        }
        samples += term;
        se_samples += se_term;
        rounds += (term + 1.0).ln() / (alpha as f64).ln();
        let t_j = if gap > 0.0 { t_j_oracle(gap, sigma, k, delta, bits, alpha).ok() } else { None };
        arms.push(ArmBound { arm, gap, term, se_term, t_j, vacuous });
    }

    Ok(BoundReport {
        bits,
        alpha,
        delta,
        c,
        c_tight,
        delta_max: dmax,
        delta_ok: dmax.is_none_or(|d| delta < d),
        sample_bound: samples,
        round_bound: rounds,
        bit_bound: bits as f64 * rounds,
        se_sample_bound: se_samples,
        arms,
    })
}
