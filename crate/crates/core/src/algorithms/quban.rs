//! Grid quantizer with distance-dependent codewords, used by the QuBan-style
//! baseline and by the first round of ICQ-SE on unbounded rewards.
//!
//! A value is expressed as a signed number of grid steps `k` away from a
//! reference point both sides know. `k` is sent as a prefix-free codeword of
//! `1 + 2 * ceil(log2(1 + |k|))` bits:
//!
//! ```text
//! n = ceil(log2(1 + |k|))
//! n ones, one zero             (length prefix)
//! sign bit                     (only if n >= 1; 1 = negative)
//! |k| - 2^(n-1) in n - 1 bits  (only if n >= 2)
//! ```
//!
//! so `k = 0` costs a single `0` bit.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantizer::BitString;

fn magnitude_class(k: i64) -> u32 {
    // smallest n with |k| <= 2^n - 1
    64 - k.unsigned_abs().leading_zeros()
}

pub fn codeword_len(k: i64) -> usize {
    1 + 2 * magnitude_class(k) as usize
}

pub fn encode_index(k: i64) -> BitString {
    let n = magnitude_class(k);
    let mut out = BitString::new(vec![true; n as usize]);
    out.push(false);
    if n >= 1 {
        out.push(k < 0);
        if n >= 2 {
            out.extend_from_index(k.unsigned_abs() - (1u64 << (n - 1)), n - 1);
        }
    }
    out
}

/// Decode one codeword from the front of `bits`; returns `(k, bits used)`.
pub fn decode_index(bits: &[bool]) -> Result<(i64, usize)> {
    let truncated = || Error::Protocol("truncated grid codeword".into());
    let n = bits.iter().take_while(|&&b| b).count();
    if n > 63 {
        return Err(Error::Protocol(format!("grid codeword length class {n} too large")));
    }
    if n == bits.len() {
        return Err(truncated());
    }
    if n == 0 {
        return Ok((0, 1));
    }
    let used = 2 * n + 1;
    let body = bits.get(n + 1..used).ok_or_else(truncated)?;
    let negative = body[0];
    let offset = body[1..].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    let magnitude = (1u64 << (n - 1)) + offset;
    let k = magnitude as i64;
    Ok((if negative { -k } else { k }, used))
}

/// Decode a payload that must hold exactly one codeword.
pub fn decode_payload(s: &BitString) -> Result<i64> {
    let (k, used) = decode_index(s.bits())?;
    if used != s.len() {
        return Err(Error::Protocol(format!(
            "grid payload has {} bits, codeword uses {used}",
            s.len()
        )));
    }
    Ok(k)
}

/// Nearest grid index to `z` (in steps), ties toward the lower index.
pub fn nearest_index(z: f64) -> Result<i64> {
    if !z.is_finite() {
        return Err(Error::Encoding(z));
    }
    Ok((z - 0.5).ceil() as i64)
}

/// Unbiased randomized rounding of `z` to one of its two neighbouring
/// integers: `E[index] = z`.
pub fn stochastic_index<R: Rng + ?Sized>(z: f64, rng: &mut R) -> Result<i64> {
    if !z.is_finite() {
        return Err(Error::Encoding(z));
    }
    let floor = z.floor();
    let up = rng.random::<f64>() < z - floor;
    Ok(floor as i64 + up as i64)
}

/// Multiplier on the raw-mean width that covers randomized rounding with
/// per-round grid step `epsilon / sqrt(b_i)`.
///
/// The rounding error of a round is zero-mean and confined to one grid step,
/// so it is `epsilon^2 / (4 b_i)`-subgaussian. Weighted by `b_i / t_i` and
/// summed over rounds it adds `epsilon^2 / 4` to the per-sample variance
/// proxy `sigma^2`.
pub fn width_factor(sigma: f64, epsilon: f64) -> f64 {
    (sigma * sigma + epsilon * epsilon / 4.0).sqrt() / sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn codeword_lengths() {
        assert_eq!(codeword_len(0), 1);
        assert_eq!(encode_index(0).to_string(), "0");
        assert_eq!(codeword_len(1), 3);
        assert_eq!(codeword_len(-1), 3);
        assert_eq!(codeword_len(2), 5);
        assert_eq!(codeword_len(3), 5);
        assert_eq!(codeword_len(4), 7);
        for d in 0..1000i64 {
            let formula = 1 + 2 * ((1.0 + d as f64).log2().ceil() as usize);
            assert_eq!(codeword_len(d), formula, "d={d}");
        }
    }

    #[test]
    fn hand_encoded_codewords() {
        assert_eq!(encode_index(1).to_string(), "100");
        assert_eq!(encode_index(-1).to_string(), "101");
        assert_eq!(encode_index(3).to_string(), "11001");
        assert_eq!(encode_index(-4).to_string(), "1110100");
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_index(&[]).is_err());
        assert!(decode_index(&[true, true]).is_err());
        assert!(decode_index(&[true, true, false, false]).is_err());
        assert!(decode_payload(&"00".parse().unwrap()).is_err());
    }

    #[test]
    fn rounding_rules() {
        assert_eq!(nearest_index(0.5).unwrap(), 0);
        assert_eq!(nearest_index(0.51).unwrap(), 1);
        assert_eq!(nearest_index(-0.5).unwrap(), -1);
        assert_eq!(nearest_index(-1.2).unwrap(), -1);
        assert!(nearest_index(f64::NAN).is_err());
        let mut rng = crate::rng::stream(3, 0);
        assert_eq!(stochastic_index(4.0, &mut rng).unwrap(), 4);
        let n = 200_000;
        let mean = (0..n).map(|_| stochastic_index(-2.3, &mut rng).unwrap() as f64).sum::<f64>()
            / n as f64;
        assert!((mean + 2.3).abs() < 0.005, "{mean}");
    }

    #[test]
    fn width_factor_limits() {
        assert_eq!(width_factor(0.5, 0.0), 1.0);
        assert!((width_factor(0.5, 2.0) - 5f64.sqrt()).abs() < 1e-12);
        assert!(width_factor(0.5, 0.5) < width_factor(0.5, 2.0));
    }

    proptest! {
        #[test]
        fn codeword_round_trip(k in -(1i64 << 40)..(1i64 << 40), tail in prop::collection::vec(any::<bool>(), 0..8)) {
            let s = encode_index(k);
            prop_assert_eq!(s.len(), codeword_len(k));
            let mut bits = s.bits().to_vec();
            bits.extend(tail);
            prop_assert_eq!(decode_index(&bits).unwrap(), (k, s.len()));
        }
    }
}
