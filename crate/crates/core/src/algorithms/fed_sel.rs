//! Fixed-grid quantizer of the Fed-SEL-style baseline: the whole support is
//! cut into `ceil((b - a) / U')` equal bins and the mean is sent as a bin
//! index of `max(1, ceil(log2 n))` bits.

use crate::error::{param, Error, Result};
use crate::quantizer::{BitString, Interval};

pub fn bin_count(support: &Interval, u_prime: f64) -> Result<u64> {
    if !(u_prime > 0.0 && u_prime.is_finite()) {
        return Err(param(format!("bin length must be positive and finite, got {u_prime}")));
    }
    let n = (support.width() / u_prime).ceil();
    if n >= u64::MAX as f64 {
        return Err(Error::Domain(format!("bin count {n} overflows")));
    }
    Ok((n as u64).max(1))
}

pub fn payload_bits(bins: u64) -> u32 {
    if bins <= 2 {
        1
    } else {
        64 - (bins - 1).leading_zeros()
    }
}

fn bin_len(support: &Interval, bins: u64) -> f64 {
    support.width() / bins as f64
}

/// Index of the bin containing `x`, clamped to the support; bin edges go to
/// the lower bin.
pub fn bin_of(x: f64, support: &Interval, bins: u64) -> Result<u64> {
    if !x.is_finite() {
        return Err(Error::Encoding(x));
    }
    let u = (x - support.lo()) / bin_len(support, bins);
    if u <= 0.0 {
        return Ok(0);
    }
    Ok(((u.ceil() as u64).max(1) - 1).min(bins - 1))
}

pub fn encode(x: f64, support: &Interval, bins: u64) -> Result<BitString> {
    Ok(BitString::from_index(bin_of(x, support, bins)?, payload_bits(bins)))
}

pub fn decode(s: &BitString, support: &Interval, bins: u64) -> Result<f64> {
    let expected = payload_bits(bins) as usize;
    if s.len() != expected {
        return Err(Error::Protocol(format!("payload has {} bits, expected {expected}", s.len())));
    }
    let index = s.index().expect("at most 64 bits");
    if index >= bins {
        return Err(Error::Protocol(format!("bin index {index} out of range for {bins} bins")));
    }
    Ok(support.lo() + (index as f64 + 0.5) * bin_len(support, bins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn payload_examples() {
        assert_eq!(bin_count(&unit(), 0.1).unwrap(), 10);
        assert_eq!(payload_bits(10), 4);
        assert_eq!(bin_count(&unit(), 1.0).unwrap(), 1);
        assert_eq!(bin_count(&unit(), 3.7).unwrap(), 1);
        assert_eq!(payload_bits(1), 1);
        assert_eq!(payload_bits(2), 1);
        assert_eq!(payload_bits(3), 2);
        assert_eq!(payload_bits(4), 2);
        assert_eq!(payload_bits(5), 3);
        for n in 1..5000u64 {
            let oracle = ((n as f64).log2().ceil() as u32).max(1);
            assert_eq!(payload_bits(n), oracle, "n={n}");
        }
    }

    #[test]
    fn payload_grows_along_schedule() {
        let mut last = 0;
        for i in 1..40u32 {
            let u = crate::confidence::u_prime(2u64.pow(i), 0.1, 5, 0.5).unwrap();
            let bits = payload_bits(bin_count(&unit(), u).unwrap());
            assert!(bits >= last);
            last = bits;
        }
        assert!(last > 10);
    }

    #[test]
    fn codec_examples() {
        let s = encode(0.33, &unit(), 10).unwrap();
        assert_eq!(s.to_string(), "0011");
        assert!((decode(&s, &unit(), 10).unwrap() - 0.35).abs() < 1e-15);
        assert_eq!(bin_of(0.3, &unit(), 10).unwrap(), 2);
        assert_eq!(bin_of(-5.0, &unit(), 10).unwrap(), 0);
        assert_eq!(bin_of(5.0, &unit(), 10).unwrap(), 9);
        assert!(decode(&"1111".parse().unwrap(), &unit(), 10).is_err());
        assert!(decode(&"111".parse().unwrap(), &unit(), 10).is_err());
    }

    proptest! {
        #[test]
        fn error_is_half_bin(x in 0.0f64..=1.0, bins in 1u64..5000) {
            let back = decode(&encode(x, &unit(), bins).unwrap(), &unit(), bins).unwrap();
            prop_assert!((back - x).abs() <= 0.5 / bins as f64 + 1e-12);
        }
    }
}
