//! Room impulse responses: the container, a parametric generator, and
//! convolution of a loudspeaker signal with the echo path.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::rng::SimRng;
use crate::audio::{read_wav, SampleBuffer};
use crate::error::{Error, Result};

/// Above this many multiply-adds convolution switches to the FFT path.
const DIRECT_WORK_LIMIT: usize = 1 << 20;

/// Amplitude decay rate giving 60 dB attenuation after one RT60: ln(1000).
pub const DECAY_PER_RT60: f64 = 6.907_755_278_982_137;

#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    taps: Vec<f64>,
    sample_rate: u32,
}

impl Rir {
    pub fn new(taps: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Parameter("sample rate must be positive".into()));
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("impulse response"));
        }
        if taps.iter().all(|&t| t == 0.0) {
            return Err(Error::Parameter("impulse response has no nonzero tap".into()));
        }
        Ok(Self { taps, sample_rate })
    }

    pub fn from_wav(path: impl AsRef<Path>) -> Result<Self> {
        let b = read_wav(path)?;
        let rate = b.sample_rate();
        Self::new(b.into_samples(), rate)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Index of the strongest tap, used as the direct-path delay.
    pub fn peak_index(&self) -> usize {
        self.taps
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    /// Exponentially decaying Gaussian noise with a unit direct-path tap at
    /// `delay` samples. The tail amplitude falls by 60 dB over `rt60` seconds.
    pub fn synthetic(rt60: f64, sample_rate: u32, delay: usize, rng: &mut SimRng) -> Result<Self> {
        if !(rt60 > 0.0 && rt60.is_finite()) {
            return Err(Error::Parameter(format!("rt60 {rt60} must be positive")));
        }
        let fs = sample_rate as f64;
        let tail = (rt60 * fs).ceil() as usize;
        let mut taps = vec![0.0; delay + tail];
        taps[delay] = 1.0;
        let rate = DECAY_PER_RT60 / (rt60 * fs);
        for (n, t) in taps[delay + 1..].iter_mut().enumerate() {
            let g: f64 = rng.sample(StandardNormal);
            *t = 0.1 * g * (-rate * (n + 1) as f64).exp();
        }
        Self::new(taps, sample_rate)
    }
}

/// Linear convolution `rir * signal`, truncated to the input length.
pub fn convolve_rir(signal: &SampleBuffer, rir: &Rir) -> Result<SampleBuffer> {
    if signal.sample_rate() != rir.sample_rate() {
        return Err(Error::SampleRateMismatch(signal.sample_rate(), rir.sample_rate()));
    }
    let x = signal.samples();
    let h = rir.taps();
    let out = if x.len().saturating_mul(h.len()) <= DIRECT_WORK_LIMIT {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    };
    Ok(signal.with_samples(out))
}

pub(crate) fn convolve_direct(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 || k >= x.len() {
            continue;
        }
        for (yn, &xn) in y[k..].iter_mut().zip(x) {
            *yn += hk * xn;
        }
    }
    y
}

pub(crate) fn convolve_fft(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    // Taps past the input length cannot reach the truncated output.
    let h = &h[..h.len().min(x.len())];
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // pack x into the real part and h into the imaginary part: one forward FFT
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    for (b, &v) in buf.iter_mut().zip(h) {
        b.im = v;
    }
    fwd.process(&mut buf);
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let a = buf[k];
        let b = buf[(n - k) % n].conj();
        let xk = (a + b) * 0.5;
        let hk = (a - b) * Complex64::new(0.0, -0.5);
        prod[k] = xk * hk;
    }
    inv.process(&mut prod);
    let scale = 1.0 / n as f64;
    prod[..x.len()].iter().map(|c| c.re * scale).collect()
}
