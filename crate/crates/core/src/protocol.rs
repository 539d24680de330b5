//! Communication layer: the sparse pull schedule, uplink framing, and bit
//! accounting.
//!
//! # Frame layout
//!
//! ```text
//! offset  size  field
//! 0       4     round        u32, big-endian
//! 4       2     arm          u16, big-endian
//! 6       2     bit length   u16, big-endian (n >= 1)
//! 8       ⌈n/8⌉ payload      bits MSB-first, zero padded to a byte boundary
//! ```
//!
//! Only payload bits count toward the uplink bit total; headers are framing.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantizer::BitString;

pub const HEADER_LEN: usize = 8;

/// Cumulative pulls per active arm `t(i) = alpha^i`, with `t(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    alpha: u64,
}

impl Schedule {
    pub fn new(alpha: u64) -> Result<Self> {
        if alpha < 2 {
            return Err(param(format!("schedule base alpha must be >= 2, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn t(&self, round: u32) -> Result<u64> {
        if round == 0 {
            return Ok(0);
        }
        self.alpha
            .checked_pow(round)
            .ok_or(Error::ScheduleOverflow { alpha: self.alpha, round })
    }

    /// Pulls made in round `round >= 1`: `t(i) - t(i-1)`.
    pub fn b(&self, round: u32) -> Result<u64> {
        if round == 0 {
            return Err(param("batch size is defined for rounds >= 1"));
        }
        Ok(self.t(round)? - self.t(round - 1)?)
    }
}

pub fn schedule_t(alpha: u64, round: u32) -> Result<u64> {
    Schedule::new(alpha)?.t(round)
}

pub fn schedule_b(alpha: u64, round: u32) -> Result<u64> {
    Schedule::new(alpha)?.b(round)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkMessage {
    pub round: u32,
    pub arm: u16,
    pub payload: BitString,
}

/// Learner broadcast at the start of a round. Downlink is not bit-limited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkAction {
    pub round: u32,
    pub active_set: Vec<usize>,
    pub pulls: u64,
}

pub fn pack(msg: &UplinkMessage) -> Result<Vec<u8>> {
    let n = msg.payload.len();
    if n == 0 {
        return Err(Error::Protocol("empty payload".into()));
    }
    let n16 = u16::try_from(n)
        .map_err(|_| Error::Protocol(format!("payload of {n} bits exceeds frame limit")))?;
    let mut out = Vec::with_capacity(HEADER_LEN + n.div_ceil(8));
    out.extend_from_slice(&msg.round.to_be_bytes());
    out.extend_from_slice(&msg.arm.to_be_bytes());
    out.extend_from_slice(&n16.to_be_bytes());
    for chunk in msg.payload.bits().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)));
        out.push(byte);
    }
    Ok(out)
}

/// Decode the frame at the start of `bytes`, returning it and its length.
pub fn unpack_prefix(bytes: &[u8]) -> Result<(UplinkMessage, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Protocol(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    let round = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
    let arm = u16::from_be_bytes(bytes[4..6].try_into().expect("2 bytes"));
    let n = u16::from_be_bytes(bytes[6..8].try_into().expect("2 bytes")) as usize;
    if n == 0 {
        return Err(Error::Protocol("declared payload length 0".into()));
    }
    let body_len = n.div_ceil(8);
    let body = bytes.get(HEADER_LEN..HEADER_LEN + body_len).ok_or_else(|| {
        Error::Protocol(format!(
            "declared {n} payload bits but only {} bytes follow the header",
            bytes.len() - HEADER_LEN
        ))
    })?;
    let bits: Vec<bool> = (0..n).map(|i| (body[i / 8] >> (7 - i % 8)) & 1 == 1).collect();
    let pad_bits = body_len * 8 - n;
    if pad_bits > 0 && body[body_len - 1] & ((1u8 << pad_bits) - 1) != 0 {
        return Err(Error::Protocol("nonzero padding bits".into()));
    }
    Ok((UplinkMessage { round, arm, payload: BitString::new(bits) }, HEADER_LEN + body_len))
}

/// Decode exactly one frame; trailing bytes are an error.
pub fn unpack(bytes: &[u8]) -> Result<UplinkMessage> {
    let (msg, used) = unpack_prefix(bytes)?;
    if used != bytes.len() {
        return Err(Error::Protocol(format!(
            "{} trailing bytes after frame",
            bytes.len() - used
        )));
    }
    Ok(msg)
}

/// Decode a concatenation of frames.
pub fn unpack_all(mut bytes: &[u8]) -> Result<Vec<UplinkMessage>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (msg, used) = unpack_prefix(bytes)?;
        out.push(msg);
        bytes = &bytes[used..];
    }
    Ok(out)
}

/// Total payload bits in a message log.
pub fn account_bits(log: &[UplinkMessage]) -> u64 {
    log.iter().map(|m| m.payload.len() as u64).sum()
}

pub fn write_log(path: &Path, log: &[UplinkMessage]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for msg in log {
        file.write_all(&pack(msg)?)?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<UplinkMessage>> {
    unpack_all(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        let s = Schedule::new(2).unwrap();
        assert_eq!((1..=4).map(|i| s.t(i).unwrap()).collect::<Vec<_>>(), [2, 4, 8, 16]);
        assert_eq!((1..=4).map(|i| s.b(i).unwrap()).collect::<Vec<_>>(), [2, 2, 4, 8]);
        let s = Schedule::new(3).unwrap();
        assert_eq!((1..=3).map(|i| s.t(i).unwrap()).collect::<Vec<_>>(), [3, 9, 27]);
        assert_eq!((1..=3).map(|i| s.b(i).unwrap()).collect::<Vec<_>>(), [3, 6, 18]);
        assert_eq!(s.t(0).unwrap(), 0);
    }

    #[test]
    fn batches_telescope() {
        for alpha in 2..=9u64 {
            let s = Schedule::new(alpha).unwrap();
            let mut total = 0;
            for i in 1..=(if alpha <= 4 { 30 } else { 20 }) {
                total += s.b(i).unwrap();
                assert_eq!(total, s.t(i).unwrap());
                assert!(s.b(i).unwrap() >= 1);
            }
        }
    }

    #[test]
    fn schedule_overflow_is_reported() {
        let s = Schedule::new(9).unwrap();
        assert!(s.t(20).is_ok());
        assert!(matches!(s.t(21), Err(Error::ScheduleOverflow { alpha: 9, round: 21 })));
        assert!(Schedule::new(1).is_err());
        assert!(s.b(0).is_err());
    }

    #[test]
    fn frame_matches_hand_encoding() {
        let msg = UplinkMessage { round: 3, arm: 1, payload: "01".parse().unwrap() };
        let bytes = pack(&msg).unwrap();
        assert_eq!(bytes, [0, 0, 0, 3, 0, 1, 0, 2, 0b0100_0000]);
        assert_eq!(unpack(&bytes).unwrap(), msg);
    }

    #[test]
    fn malformed_frames_are_rejected() {
        // declares 9 bits but carries one byte
        let bad = [0, 0, 0, 1, 0, 0, 0, 9, 0xff];
        assert!(matches!(unpack(&bad), Err(Error::Protocol(_))));
        assert!(matches!(unpack(&[0, 0, 0]), Err(Error::Protocol(_))));
        assert!(matches!(unpack(&[0, 0, 0, 1, 0, 0, 0, 0]), Err(Error::Protocol(_))));
        // padding must be zero
        assert!(unpack(&[0, 0, 0, 1, 0, 0, 0, 2, 0b0100_0001]).is_err());
        assert!(unpack(&[0, 0, 0, 1, 0, 0, 0, 2, 0b0100_0000, 7]).is_err());
        let empty = UplinkMessage { round: 1, arm: 0, payload: BitString::default() };
        assert!(pack(&empty).is_err());
    }

    #[test]
    fn accounting_counts_payload_bits_only() {
        let m = |r| UplinkMessage { round: r, arm: 0, payload: "101".parse().unwrap() };
        let log: Vec<_> = (1..=5).map(m).collect();
        assert_eq!(account_bits(&log), 15);
        assert_eq!(account_bits(&[]), 0);
    }

    #[test]
    fn log_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wire.bin");
        let log = vec![
            UplinkMessage { round: 1, arm: 0, payload: "1".parse().unwrap() },
            UplinkMessage { round: 1, arm: 4, payload: "0110101101".parse().unwrap() },
        ];
        write_log(&path, &log).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 9 + 10);
        assert_eq!(read_log(&path).unwrap(), log);
    }

    fn message() -> impl Strategy<Value = UplinkMessage> {
        (any::<u32>(), any::<u16>(), prop::collection::vec(any::<bool>(), 1..200)).prop_map(
            |(round, arm, bits)| UplinkMessage { round, arm, payload: BitString::new(bits) },
        )
    }

    proptest! {
        #[test]
        fn pack_unpack_inverse(msg in message()) {
            let bytes = pack(&msg).unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + msg.payload.len().div_ceil(8));
            prop_assert_eq!(unpack(&bytes).unwrap(), msg);
        }

        #[test]
        fn truncation_is_detected(msg in message(), cut in 1usize..8) {
            let bytes = pack(&msg).unwrap();
            let keep = bytes.len().saturating_sub(cut);
            prop_assert!(unpack(&bytes[..keep]).is_err());
        }
    }
}
