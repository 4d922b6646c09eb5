//! On-board storage arithmetic for time-tagged detector events.

mod codec;

pub use codec::{
    decode_stream, encode_stream, quantize, CodecMode, DecodedStream, TimeTagRecord, DELTA_BITS,
    HEADER_LEN, MAGIC, TICK_BITS, VERSION,
};

use crate::error::{domain, Result};

/// Seconds in six months of 182.5 days.
pub const SIX_MONTHS_S: f64 = 182.5 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitsPerEvent {
    /// `log2(horizon / dt) + 2`.
    pub exact: f64,
    /// Rounded up to a whole number of bytes.
    pub byte_aligned: u32,
}

/// Storage per event: a unique timestamp over `horizon_s` at resolution
/// `delta_t_s`, plus one basis bit and one outcome bit.
pub fn bits_per_event(horizon_s: f64, delta_t_s: f64) -> Result<BitsPerEvent> {
    if !(delta_t_s > 0.0) || !(horizon_s >= delta_t_s) {
        return domain(format!(
            "need horizon >= dt > 0, got horizon {horizon_s} s, dt {delta_t_s} s"
        ));
    }
    let exact = (horizon_s / delta_t_s).log2() + 2.0;
    let byte_aligned = ((exact / 8.0).ceil() * 8.0) as u32;
    Ok(BitsPerEvent {
        exact,
        byte_aligned,
    })
}

/// Bytes per second for a stream of events.
pub fn stream_rate(event_rate_cps: f64, bits_per_event: f64) -> f64 {
    event_rate_cps * bits_per_event / 8.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassVolume {
    pub per_experiment_bytes: f64,
    pub per_day_bytes: f64,
}

pub fn pass_volume(duration_s: f64, rate_bytes_s: f64, passes_per_day: f64) -> PassVolume {
    let per_experiment_bytes = duration_s * rate_bytes_s;
    PassVolume {
        per_experiment_bytes,
        per_day_bytes: per_experiment_bytes * passes_per_day,
    }
}

pub fn housekeeping_volume(
    n_channels: u32,
    bytes_per_value: f64,
    sample_rate_hz: f64,
    duration_s: f64,
) -> f64 {
    n_channels as f64 * bytes_per_value * sample_rate_hz * duration_s
}
