//! Confidence widths for raw and quantized means.
//!
//! `u_prime` is the subgaussian width of an empirical mean over `t` samples,
//! union-bounded over arms and rounds. `u_next` inflates it to cover the
//! quantization error of a B-bit transmission made over the interval
//! returned by `quant_interval`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantizer::Interval;

/// `sigma * sqrt(2 ln(4 K t^2 / delta) / t)`.
pub fn u_prime(t: u64, delta: f64, k: usize, sigma: f64) -> Result<f64> {
    u_prime_real(t as f64, delta, k, sigma)
}

/// [`u_prime`] at a real-valued sample count.
pub fn u_prime_real(t: f64, delta: f64, k: usize, sigma: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(param(format!("sample count must be >= 1, got {t}")));
    }
    if !(delta > 0.0) {
        return Err(param(format!("delta must be positive, got {delta}")));
    }
    if !(sigma > 0.0) {
        return Err(param(format!("sigma must be positive, got {sigma}")));
    }
    // ln(4K) + 2 ln t - ln(delta), computed in log space so t = 2^60 stays exact
    let log_arg = (4.0 * k as f64).ln() + 2.0 * t.ln() - delta.ln();
    if !(log_arg > 0.0) {
        return Err(Error::Domain(format!(
            "4K t^2 / delta <= 1 (K={k}, t={t}, delta={delta})"
        )));
    }
    Ok(sigma * (2.0 * log_arg / t).sqrt())
}

/// One step of the width recursion:
/// `U(i) = (U'(i) + U(i-1)) / 2^B + U'(i)`.
pub fn u_next(u_prime_i: f64, u_prev: f64, bits: u32) -> f64 {
    (u_prime_i + u_prev) / 2f64.powi(bits as i32) + u_prime_i
}

/// Quantization interval `[lcb - U', ucb + U']` for the current round.
pub fn quant_interval(lcb_prev: f64, ucb_prev: f64, u_prime_i: f64) -> Result<Interval> {
    Interval::new(lcb_prev - u_prime_i, ucb_prev + u_prime_i)
}

pub fn lcb_ucb(mu_tilde: f64, u: f64) -> (f64, f64) {
    (mu_tilde - u, mu_tilde + u)
}

/// Widths computed for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundWidths {
    pub u_prime: f64,
    pub u: f64,
}

/// Per-trial carrier of `U(i-1)` for the recursion. Learner and agents each
/// own one and advance them through the same code path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceState {
    delta: f64,
    k: usize,
    sigma: f64,
    bits: u32,
    u_prev: f64,
    round: u32,
}

impl ConfidenceState {
    /// State at round 0 with `U(0) = u0` (the support width for bounded rewards).
    pub fn new(delta: f64, k: usize, sigma: f64, bits: u32, u0: f64) -> Result<Self> {
        if !(u0 > 0.0) {
            return Err(param(format!("U(0) must be positive, got {u0}")));
        }
        Ok(Self { delta, k, sigma, bits, u_prev: u0, round: 0 })
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn u_prev(&self) -> f64 {
        self.u_prev
    }

    pub fn u_prime(&self, t: u64) -> Result<f64> {
        u_prime(t, self.delta, self.k, self.sigma)
    }

    /// Advance one round with cumulative sample count `t`.
    pub fn advance(&mut self, t: u64) -> Result<RoundWidths> {
        let u_prime_i = self.u_prime(t)?;
        let u = u_next(u_prime_i, self.u_prev, self.bits);
        self.u_prev = u;
        self.round += 1;
        Ok(RoundWidths { u_prime: u_prime_i, u })
    }

    /// Advance one round with an externally fixed width (the unbounded bootstrap).
    pub fn advance_to(&mut self, u: f64) {
        self.u_prev = u;
        self.round += 1;
    }
}

/// What the learner believes about one arm after a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmBelief {
    pub mu_tilde: f64,
    pub lcb: f64,
    pub ucb: f64,
    pub active: bool,
}

impl ArmBelief {
    pub fn new(mu_tilde: f64, u: f64) -> Self {
        let (lcb, ucb) = lcb_ucb(mu_tilde, u);
        Self { mu_tilde, lcb, ucb, active: true }
    }

    pub fn update(&mut self, mu_tilde: f64, u: f64) {
        let (lcb, ucb) = lcb_ucb(mu_tilde, u);
        self.mu_tilde = mu_tilde;
        self.lcb = lcb;
        self.ucb = ucb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::error_bound;

    #[test]
    fn u_prime_direct_evaluation() {
        // 0.5 * sqrt(2 ln(3200) / 4), ln 3200 = 8.0709...
        let v = u_prime(4, 0.1, 5, 0.5).unwrap();
        let expected = 0.5 * (2.0 * 3200f64.ln() / 4.0).sqrt();
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 1.0044).abs() < 1e-4, "{v}");
        assert_eq!(u_prime(4, 0.1, 5, 1.0).unwrap(), 2.0 * v);
    }

    #[test]
    fn u_prime_decreases_along_schedule() {
        let at = |i: i32| u_prime(2u64.pow(i as u32), 0.1, 5, 0.5).unwrap();
        assert!(at(20) < at(10));
        for i in 1..40 {
            assert!(at(i + 1) < at(i));
        }
    }

    #[test]
    fn u_prime_rejects_bad_domain() {
        assert!(u_prime(0, 0.1, 5, 0.5).is_err());
        assert!(u_prime(1, 0.0, 5, 0.5).is_err());
        assert!(u_prime(1, 0.1, 5, -1.0).is_err());
        // 4 K t^2 / delta = 4 * 2 * 1 / 10 < 1
        assert!(matches!(u_prime(1, 10.0, 2, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn recursion_examples() {
        let u1 = u_next(0.2, 1.0, 1);
        assert!((u1 - 0.8).abs() < 1e-15);
        let u2 = u_next(0.15, u1, 1);
        assert!((u2 - 0.625).abs() < 1e-15);
        assert!((u_next(0.2, 1.0, 50) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn interval_and_bounds() {
        let iv = quant_interval(0.2, 0.8, 0.1).unwrap();
        assert!((iv.lo() - 0.1).abs() < 1e-15 && (iv.hi() - 0.9).abs() < 1e-15);
        assert_eq!(lcb_ucb(0.5, 0.1), (0.4, 0.6));
        assert_eq!(lcb_ucb(0.0, 0.3), (-0.3, 0.3));
    }

    #[test]
    fn quantizer_slack_matches_recursion_term() {
        let mut state = ConfidenceState::new(0.1, 5, 0.5, 3, 1.0).unwrap();
        let mut belief = ArmBelief::new(0.42, 1.0);
        for i in 1..=12u32 {
            let t = 2u64.pow(i);
            let u_prev = state.u_prev();
            let w = state.advance(t).unwrap();
            let iv = quant_interval(belief.lcb, belief.ucb, w.u_prime).unwrap();
            assert!((iv.width() - 2.0 * (u_prev + w.u_prime)).abs() < 1e-12);
            let slack = error_bound(3, &iv);
            assert!((slack - (w.u_prime + u_prev) / 8.0).abs() < 1e-12);
            assert!((w.u - (w.u_prime + slack)).abs() < 1e-12);
            assert!(w.u > w.u_prime);
            belief.update(0.42, w.u);
            assert!((belief.ucb - belief.lcb - 2.0 * w.u).abs() < 1e-12);
        }
        assert_eq!(state.round(), 12);
    }
}
