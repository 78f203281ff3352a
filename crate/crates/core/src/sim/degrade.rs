//! Test-set style degradations: long delays, level steps and dropouts.

use rand::seq::index;

use super::rng::scenario_rng;
use crate::audio::SampleBuffer;
use crate::error::{Error, Result};

/// Delays by `delay_samples`, zero-filling the head and keeping the length.
pub fn inject_delay(signal: &SampleBuffer, delay_samples: usize) -> SampleBuffer {
    let x = signal.samples();
    let d = delay_samples.min(x.len());
    let mut out = vec![0.0; x.len()];
    out[d..].copy_from_slice(&x[..x.len() - d]);
    signal.with_samples(out)
}

/// Multiplies every sample at or after `at_s` seconds by `10^(gain_db/20)`.
pub fn inject_gain_step(signal: &SampleBuffer, at_s: f64, gain_db: f64) -> Result<SampleBuffer> {
    if !(at_s.is_finite() && gain_db.is_finite()) || at_s < 0.0 {
        return Err(Error::Parameter(format!("gain step at {at_s} s, {gain_db} dB")));
    }
    let start = (at_s * signal.sample_rate() as f64).ceil() as usize;
    let g = 10f64.powf(gain_db / 20.0);
    let mut out = signal.samples().to_vec();
    if start < out.len() {
        out[start..].iter_mut().for_each(|v| *v *= g);
    }
    Ok(signal.with_samples(out))
}

/// Zeroes `round(rate * duration)` randomly chosen `frame_ms` segments
/// (distinct, chosen uniformly). The trailing partial segment is a candidate.
pub fn inject_glitches(signal: &SampleBuffer, rate: f64, frame_ms: f64, seed: u64) -> Result<SampleBuffer> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Parameter(format!("glitch rate {rate}")));
    }
    let frame = (frame_ms * signal.sample_rate() as f64 / 1000.0).round() as usize;
    if frame == 0 {
        return Err(Error::Parameter(format!("glitch length {frame_ms} ms is under one sample")));
    }
    let len = signal.len();
    let segments = len.div_ceil(frame);
    let drops = ((rate * signal.duration_seconds()).round() as usize).min(segments);
    let mut out = signal.samples().to_vec();
    if drops == 0 {
        return Ok(signal.with_samples(out));
    }
    let mut rng = scenario_rng(seed, u64::MAX);
    for seg in index::sample(&mut rng, segments, drops) {
        let start = seg * frame;
        out[start..(start + frame).min(len)].iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(signal.with_samples(out))
}
