//! Uniform B-bit interval quantizer.
//!
//! An interval `[lo, hi]` is split into `2^B` equal bins. The encoder maps a
//! real number to the B-bit label (MSB first) of the bin midpoint nearest to
//! it; values outside the interval saturate to the first or last bin. The
//! decoder maps a label back to its midpoint. For `x` inside the interval the
//! round trip error is at most `width / 2^(B+1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Largest supported bit width. Bin indices and midpoints stay exact in `f64`.
pub const MAX_BITS: u32 = 52;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(param(format!("interval endpoints must be finite, got [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(param(format!("interval needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// An ordered bit sequence; the payload of one uplink transmission.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The `len`-bit MSB-first representation of `index`.
    ///
    /// Panics if `len > 64` or `index` does not fit in `len` bits.
    pub fn from_index(index: u64, len: u32) -> Self {
        assert!(len <= 64, "index bit strings are at most 64 bits");
        assert!(len == 64 || index >> len == 0, "index {index} does not fit in {len} bits");
        let bits = (0..len).rev().map(|shift| (index >> shift) & 1 == 1).collect();
        Self { bits }
    }

    /// Unsigned value of the bits read MSB first; `None` past 64 bits.
    pub fn index(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from_index(&mut self, index: u64, len: u32) {
        self.bits.extend(BitString::from_index(index, len).bits);
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(param(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::new)
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(param(format!("bit width must be in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(())
}

fn bin_width(bits: u32, iv: &Interval) -> f64 {
    iv.width() / (1u64 << bits) as f64
}

fn midpoint(index: u64, bits: u32, iv: &Interval) -> f64 {
    iv.lo + (index as f64 + 0.5) * bin_width(bits, iv)
}

/// Index of the bin whose midpoint is nearest to `x`, saturating outside the
/// interval. Equidistant ties go to the lower index.
pub fn bin_index(x: f64, bits: u32, iv: &Interval) -> Result<u64> {
    if !x.is_finite() {
        return Err(Error::Encoding(x));
    }
    check_bits(bits)?;
    let last = (1u64 << bits) - 1;
    if x <= iv.lo {
        return Ok(0);
    }
    if x >= iv.hi {
        return Ok(last);
    }
    let u = (x - iv.lo) / bin_width(bits, iv);
    // ceil(u) - 1 puts exact boundaries in the lower bin.
    let guess = if u <= 0.0 {
        0
    } else if u >= last as f64 + 1.0 {
        last
    } else {
        ((u.ceil() as u64).max(1) - 1).min(last)
    };
    // Settle against the midpoints as actually computed so rounding in `u`
    // can never pick a farther bin.
    let lo = guess.saturating_sub(1);
    let hi = (guess + 1).min(last);
    let mut best = lo;
    let mut best_dist = (midpoint(lo, bits, iv) - x).abs();
    for k in lo + 1..=hi {
        let d = (midpoint(k, bits, iv) - x).abs();
        if d < best_dist {
            best = k;
            best_dist = d;
        }
    }
    Ok(best)
}

pub fn enc(x: f64, bits: u32, iv: &Interval) -> Result<BitString> {
    bin_index(x, bits, iv).map(|k| BitString::from_index(k, bits))
}

pub fn dec(s: &BitString, bits: u32, iv: &Interval) -> Result<f64> {
    check_bits(bits)?;
    if s.len() != bits as usize {
        return Err(Error::Protocol(format!(
            "payload has {} bits, expected {bits}",
            s.len()
        )));
    }
    let index = s.index().expect("at most MAX_BITS bits");
    Ok(midpoint(index, bits, iv))
}

/// Worst-case round trip error for inputs inside `iv`.
pub fn error_bound(bits: u32, iv: &Interval) -> f64 {
    iv.width() / 2f64.powi(bits as i32 + 1)
}
