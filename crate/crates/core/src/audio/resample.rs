//! Integer-factor polyphase resampling with a Kaiser-windowed sinc low-pass.

use std::f64::consts::PI;

use super::SampleBuffer;
use crate::error::{Error, Result};

/// Filter taps per polyphase branch; the prototype has `TAPS_PER_PHASE * factor + 1` taps.
pub const TAPS_PER_PHASE: usize = 64;

/// Cutoff as a fraction of the lower of the two sample rates (0.9 of its Nyquist).
const CUTOFF_FRACTION: f64 = 0.45;
const KAISER_BETA: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Identity,
    Down(usize),
    Up(usize),
}

/// A prepared resampler between two rates related by an integer factor.
#[derive(Debug, Clone)]
pub struct Resampler {
    from: u32,
    to: u32,
    direction: Direction,
    taps: Vec<f64>,
}

impl Resampler {
    pub fn new(from: u32, to: u32) -> Result<Self> {
        if from == 0 || to == 0 {
            return Err(Error::UnsupportedRatio { from, to });
        }
        let direction = if from == to {
            Direction::Identity
        } else if from.is_multiple_of(to) {
            Direction::Down((from / to) as usize)
        } else if to.is_multiple_of(from) {
            Direction::Up((to / from) as usize)
        } else {
            return Err(Error::UnsupportedRatio { from, to });
        };
        let taps = match direction {
            Direction::Identity => vec![1.0],
            Direction::Down(m) => lowpass(m, 1.0),
            Direction::Up(m) => {
                // each branch must pass DC with unit gain or a constant input
                // picks up a ripple at the original rate
                let mut h = lowpass(m, m as f64);
                for phase in 0..m {
                    let sum: f64 = h.iter().skip(phase).step_by(m).sum();
                    h.iter_mut().skip(phase).step_by(m).for_each(|v| *v /= sum);
                }
                h
            }
        };
        Ok(Self {
            from,
            to,
            direction,
            taps,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn process(&self, input: &SampleBuffer) -> Result<SampleBuffer> {
        if input.sample_rate() != self.from {
            return Err(Error::SampleRateMismatch(input.sample_rate(), self.from));
        }
        let x = input.samples();
        let out = match self.direction {
            Direction::Identity => x.to_vec(),
            Direction::Down(m) => self.decimate(x, m),
            Direction::Up(m) => self.interpolate(x, m),
        };
        SampleBuffer::new(out, self.to)
    }

    fn decimate(&self, x: &[f64], m: usize) -> Vec<f64> {
        let h = &self.taps;
        let delay = (h.len() - 1) / 2;
        let out_len = (x.len() as f64 / m as f64).round() as usize;
        (0..out_len)
            .map(|i| {
                // y[i] = sum_k h[k] x[i*m + delay - k]
                let centre = (i * m + delay) as isize;
                let k_lo = (centre - x.len() as isize + 1).max(0) as usize;
                let k_hi = (centre as usize).min(h.len() - 1);
                (k_lo..=k_hi)
                    .map(|k| h[k] * x[centre as usize - k])
                    .sum()
            })
            .collect()
    }

    fn interpolate(&self, x: &[f64], m: usize) -> Vec<f64> {
        let h = &self.taps;
        let delay = (h.len() - 1) / 2;
        let out_len = x.len() * m;
        (0..out_len)
            .map(|n| {
                // zero-stuffed input is nonzero only at multiples of m, so only
                // one polyphase branch of h contributes to each output sample
                let pos = n + delay;
                let mut k = pos % m;
                let mut acc = 0.0;
                while k < h.len() {
                    let j = (pos - k) / m;
                    if j < x.len() {
                        acc += h[k] * x[j];
                    }
                    if pos < k + m {
                        break;
                    }
                    k += m;
                }
                acc
            })
            .collect()
    }
}

/// Resamples between rates related by an integer factor (e.g. 48 kHz <-> 16 kHz).
pub fn resample(buffer: &SampleBuffer, target_rate: u32) -> Result<SampleBuffer> {
    Resampler::new(buffer.sample_rate(), target_rate)?.process(buffer)
}

/// Kaiser-windowed sinc at the high rate, cutoff `CUTOFF_FRACTION / factor`
/// cycles/sample, scaled so its DC gain equals `gain`.
fn lowpass(factor: usize, gain: f64) -> Vec<f64> {
    let len = TAPS_PER_PHASE * factor + 1;
    let fc = CUTOFF_FRACTION / factor as f64;
    let mid = (len - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 {
                1.0
            } else {
                (2.0 * PI * fc * t).sin() / (2.0 * PI * fc * t)
            };
            let r = t / mid;
            2.0 * fc * sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt())
                / bessel_i0(KAISER_BETA)
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v *= gain / sum);
    h
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / rate as f64).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        super::super::mean_square(x).sqrt()
    }

    #[test]
    fn length_rule() {
        let b = SampleBuffer::zeros(48000, 48000).unwrap();
        assert_eq!(resample(&b, 16000).unwrap().len(), 16000);
        let b = SampleBuffer::zeros(16000, 16000).unwrap();
        assert_eq!(resample(&b, 48000).unwrap().len(), 48000);
        let b = SampleBuffer::zeros(48001, 48000).unwrap();
        assert_eq!(resample(&b, 16000).unwrap().len(), 16000);
        let b = SampleBuffer::zeros(48002, 48000).unwrap();
        assert_eq!(resample(&b, 16000).unwrap().len(), 16001);
    }

    #[test]
    fn non_integer_ratio_rejected() {
        let b = SampleBuffer::zeros(100, 48000).unwrap();
        assert!(matches!(
            resample(&b, 44100),
            Err(Error::UnsupportedRatio { .. })
        ));
    }

    #[test]
    fn dc_is_preserved_both_ways() {
        let b = SampleBuffer::new(vec![0.5; 4800], 48000).unwrap();
        let down = resample(&b, 16000).unwrap();
        for &v in &down.samples()[200..1400] {
            assert!((v - 0.5).abs() < 1e-9, "{v}");
        }
        let up = resample(&down, 48000).unwrap();
        for &v in &up.samples()[600..4200] {
            assert!((v - 0.5).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn tone_survives_decimation() {
        let x = SampleBuffer::new(tone(1000.0, 48000, 48000, 0.7), 48000).unwrap();
        let y = resample(&x, 16000).unwrap();
        let expect = tone(1000.0, 16000, 16000, 0.7);
        let steady = 500..15500;
        let err: Vec<f64> = steady
            .clone()
            .map(|i| y.samples()[i] - expect[i])
            .collect();
        assert!(rms(&err) < 0.01 * rms(&expect[steady]));
    }

    #[test]
    fn alias_band_is_rejected() {
        // 10 kHz is above the 8 kHz output Nyquist; it must not fold back.
        let x = SampleBuffer::new(tone(10_000.0, 48000, 48000, 1.0), 48000).unwrap();
        let y = resample(&x, 16000).unwrap();
        assert!(rms(&y.samples()[500..15500]) < 1e-3);
    }
}
