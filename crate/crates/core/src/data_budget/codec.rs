//! Binary time-tag file format.
//!
//! ```text
//! header (16 bytes, little-endian)
//!   0..4   magic  b"NQTT"
//!   4..6   version u16 (= 1)
//!   6..14  tick length in femtoseconds, u64
//!   14     mode u8 (0 = absolute, 1 = relative)
//!   15     pad, zero
//!
//! absolute record (8 bytes): u64 = ticks << 2 | basis << 1 | outcome
//!                            ticks < 2^62
//! relative record (6 bytes): u48 = delta << 2 | basis << 1 | outcome
//!                            delta < 2^46 - 1, ticks since the previous event
//! escape (6 bytes):          delta field all ones, followed by one absolute record
//! ```
//!
//! A relative stream starts with one absolute record; every later event is a
//! relative record, or an escape plus absolute record when its gap does not
//! fit the delta field.

use crate::error::{Error, Result};
use crate::sim::{Basis, TimeTag};

pub const MAGIC: [u8; 4] = *b"NQTT";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
/// Width of the absolute tick count.
pub const TICK_BITS: u32 = 62;
/// Width of the relative delta field.
pub const DELTA_BITS: u32 = 46;

const ABS_LEN: usize = 8;
const REL_LEN: usize = 6;
const TICK_LIMIT: u64 = 1 << TICK_BITS;
const DELTA_ESCAPE: u64 = (1 << DELTA_BITS) - 1;
const REL_MASK: u64 = (1 << 48) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecMode {
    Absolute,
    Relative,
}

impl CodecMode {
    pub fn name(self) -> &'static str {
        match self {
            CodecMode::Absolute => "absolute",
            CodecMode::Relative => "relative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "absolute" => Some(CodecMode::Absolute),
            "relative" => Some(CodecMode::Relative),
            _ => None,
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            CodecMode::Absolute => 0,
            CodecMode::Relative => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(CodecMode::Absolute),
            1 => Ok(CodecMode::Relative),
            other => Err(Error::Codec(format!("unknown mode byte {other}"))),
        }
    }
}

/// One quantized detector event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeTagRecord {
    /// Ticks since the stream epoch.
    pub quantized_time: u64,
    pub basis_bit: bool,
    pub outcome_bit: bool,
}

impl TimeTagRecord {
    fn low_bits(&self) -> u64 {
        (u64::from(self.basis_bit) << 1) | u64::from(self.outcome_bit)
    }
}

/// Rounds each timestamp to the nearest tick.
pub fn quantize(tags: &[TimeTag], delta_t_s: f64) -> Result<Vec<TimeTagRecord>> {
    if !(delta_t_s > 0.0) {
        return Err(Error::Codec(format!(
            "tick length must be > 0, got {delta_t_s}"
        )));
    }
    tags.iter()
        .map(|t| {
            let ticks = (t.time_s / delta_t_s).round();
            if !(ticks >= 0.0) || ticks >= TICK_LIMIT as f64 {
                return Err(Error::Codec(format!(
                    "timestamp {} s not representable",
                    t.time_s
                )));
            }
            Ok(TimeTagRecord {
                quantized_time: ticks as u64,
                basis_bit: t.basis == Basis::Diagonal,
                outcome_bit: t.outcome,
            })
        })
        .collect()
}

fn tick_fs(delta_t_s: f64) -> Result<u64> {
    let fs = (delta_t_s * 1e15).round();
    if !(fs >= 1.0) || fs > u64::MAX as f64 {
        return Err(Error::Codec(format!(
            "tick length {delta_t_s} s not representable in fs"
        )));
    }
    Ok(fs as u64)
}

fn push_absolute(out: &mut Vec<u8>, r: &TimeTagRecord, index: usize) -> Result<()> {
    if r.quantized_time >= TICK_LIMIT {
        return Err(Error::Codec(format!(
            "event {index}: tick count {} exceeds {TICK_BITS} bits",
            r.quantized_time
        )));
    }
    out.extend_from_slice(&((r.quantized_time << 2) | r.low_bits()).to_le_bytes());
    Ok(())
}

fn push_relative(out: &mut Vec<u8>, word: u64) {
    out.extend_from_slice(&word.to_le_bytes()[..REL_LEN]);
}

/// Serializes a time-sorted stream. Empty input gives empty output.
pub fn encode_stream(
    records: &[TimeTagRecord],
    delta_t_s: f64,
    mode: CodecMode,
) -> Result<Vec<u8>> {
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * ABS_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&tick_fs(delta_t_s)?.to_le_bytes());
    out.push(mode.to_byte());
    out.push(0);

    let mut prev: Option<u64> = None;
    for (i, r) in records.iter().enumerate() {
        if let Some(p) = prev {
            if r.quantized_time < p {
                return Err(Error::Codec(format!(
                    "event {i}: stream not sorted, gap of -{} ticks",
                    p - r.quantized_time
                )));
            }
        }
        match (mode, prev) {
            (CodecMode::Absolute, _) | (CodecMode::Relative, None) => {
                push_absolute(&mut out, r, i)?
            }
            (CodecMode::Relative, Some(p)) => {
                let delta = r.quantized_time - p;
                if delta < DELTA_ESCAPE {
                    push_relative(&mut out, (delta << 2) | r.low_bits());
                } else {
                    push_relative(&mut out, REL_MASK);
                    push_absolute(&mut out, r, i)?;
                }
            }
        }
        prev = Some(r.quantized_time);
    }
    Ok(out)
}

/// Decoded stream contents.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedStream {
    pub tick_fs: u64,
    pub mode: CodecMode,
    pub records: Vec<TimeTagRecord>,
}

impl DecodedStream {
    pub fn delta_t_s(&self) -> f64 {
        self.tick_fs as f64 * 1e-15
    }
}

fn read_absolute(bytes: &[u8], pos: &mut usize) -> Result<TimeTagRecord> {
    let end = *pos + ABS_LEN;
    let chunk = bytes
        .get(*pos..end)
        .ok_or_else(|| Error::Codec(format!("truncated absolute record at byte {}", *pos)))?;
    let word = u64::from_le_bytes(chunk.try_into().expect("8-byte slice"));
    *pos = end;
    Ok(TimeTagRecord {
        quantized_time: word >> 2,
        basis_bit: word & 0b10 != 0,
        outcome_bit: word & 0b01 != 0,
    })
}

fn read_relative_word(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let end = *pos + REL_LEN;
    let chunk = bytes
        .get(*pos..end)
        .ok_or_else(|| Error::Codec(format!("truncated relative record at byte {}", *pos)))?;
    let mut buf = [0u8; 8];
    buf[..REL_LEN].copy_from_slice(chunk);
    *pos = end;
    Ok(u64::from_le_bytes(buf))
}

/// Parses bytes produced by [`encode_stream`].
pub fn decode_stream(bytes: &[u8]) -> Result<DecodedStream> {
    if bytes.is_empty() {
        return Ok(DecodedStream {
            tick_fs: 0,
            mode: CodecMode::Absolute,
            records: Vec::new(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Codec(format!(
            "header needs {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Codec("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Codec(format!("unsupported version {version}")));
    }
    let tick_fs = u64::from_le_bytes(bytes[6..14].try_into().expect("8-byte slice"));
    let mode = CodecMode::from_byte(bytes[14])?;

    let mut pos = HEADER_LEN;
    let mut records = Vec::new();
    while pos < bytes.len() {
        let rec = match (mode, records.last()) {
            (CodecMode::Absolute, _) | (CodecMode::Relative, None) => {
                read_absolute(bytes, &mut pos)?
            }
            (CodecMode::Relative, Some(prev)) => {
                let prev: &TimeTagRecord = prev;
                let word = read_relative_word(bytes, &mut pos)?;
                let delta = word >> 2;
                if delta == DELTA_ESCAPE {
                    read_absolute(bytes, &mut pos)?
                } else {
                    TimeTagRecord {
                        quantized_time: prev.quantized_time + delta,
                        basis_bit: word & 0b10 != 0,
                        outcome_bit: word & 0b01 != 0,
                    }
                }
            }
        };
        records.push(rec);
    }
    Ok(DecodedStream {
        tick_fs,
        mode,
        records,
    })
}
