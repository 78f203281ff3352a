//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Framing is exact and unpadded: frame `f` covers samples
//! `[f * hop, f * hop + window)` and a trailing partial frame is dropped, so a
//! signal of `len` samples yields `1 + (len - window) / hop` frames.
//! Synthesis applies the analysis window again and divides by the overlapped
//! squared-window envelope, which reconstructs the input exactly wherever that
//! envelope is nonzero.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::SampleBuffer;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Envelope values below this fraction of the envelope peak count as zero.
const ENVELOPE_FLOOR: f64 = 1e-10;
/// Synthesis divides by at least this fraction of the peak envelope. Only the
/// outermost samples, covered by a single tapered frame, ever hit it; without
/// it a modified spectrum would be amplified there by up to 1/w.
pub(crate) const NORMALISE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop_length: usize,
    pub dft_size: usize,
    pub window: Window,
}

impl StftConfig {
    pub fn new(window_length: usize, hop_length: usize, dft_size: usize, window: Window) -> Result<Self> {
        let cfg = Self {
            window_length,
            hop_length,
            dft_size,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 20 ms Hann frames, 10 ms hop, 320-point DFT at 16 kHz.
    pub fn baseline() -> Self {
        Self {
            window_length: 320,
            hop_length: 160,
            dft_size: 320,
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.hop_length
            && self.hop_length <= self.window_length
            && self.window_length <= self.dft_size)
        {
            return Err(Error::Config(format!(
                "need 0 < hop ({}) <= window ({}) <= dft ({})",
                self.hop_length, self.window_length, self.dft_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.dft_size / 2 + 1
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window_length {
            0
        } else {
            1 + (len - self.window_length) / self.hop_length
        }
    }

    pub fn output_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop_length + self.window_length
        }
    }

    /// Fails unless overlapped squared windows never vanish in steady state,
    /// i.e. every interior sample can be recovered by envelope normalisation.
    pub fn check_invertible(&self) -> Result<()> {
        self.validate()?;
        let w = self.window.coefficients(self.window_length);
        let envelope: Vec<f64> = (0..self.hop_length)
            .map(|n| {
                (n..self.window_length)
                    .step_by(self.hop_length)
                    .map(|i| w[i] * w[i])
                    .sum()
            })
            .collect();
        let peak = envelope.iter().cloned().fold(0.0, f64::max);
        let low = envelope.iter().cloned().fold(f64::INFINITY, f64::min);
        if peak <= 0.0 || low <= ENVELOPE_FLOOR * peak {
            return Err(Error::Config(format!(
                "{:?} window of {} samples with hop {} does not overlap-add to a nonzero envelope",
                self.window, self.window_length, self.hop_length
            )));
        }
        Ok(())
    }
}

/// Frames x bins complex spectra plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor {
    values: Array2<Complex64>,
    config: StftConfig,
    sample_rate: u32,
}

impl SpectralTensor {
    pub fn new(values: Array2<Complex64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        config.validate()?;
        if values.ncols() != config.bins() {
            return Err(Error::Config(format!(
                "{} bins but dft size {} implies {}",
                values.ncols(),
                config.dft_size,
                config.bins()
            )));
        }
        Ok(Self {
            values,
            config,
            sample_rate,
        })
    }

    /// Builds a spectrum from per-cell magnitude and phase.
    pub fn from_polar(
        magnitude: &Array2<f64>,
        phase: &Array2<f64>,
        config: StftConfig,
        sample_rate: u32,
    ) -> Result<Self> {
        if magnitude.dim() != phase.dim() {
            return Err(Error::LengthMismatch(magnitude.len(), phase.len()));
        }
        let mut values = Array2::zeros(magnitude.dim());
        ndarray::Zip::from(&mut values)
            .and(magnitude)
            .and(phase)
            .for_each(|v, &m, &p| *v = Complex64::from_polar(m, p));
        Self::new(values, config, sample_rate)
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn bins(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.values.mapv(|c| c.norm())
    }

    pub fn phase(&self) -> Array2<f64> {
        self.values.mapv(|c| c.arg())
    }
}

/// Forward STFT. Frames are computed independently (in parallel when enabled).
pub fn stft(buffer: &SampleBuffer, config: &StftConfig) -> Result<SpectralTensor> {
    stft_with(buffer, config, Execution::Auto)
}

pub fn stft_with(buffer: &SampleBuffer, config: &StftConfig, exec: Execution) -> Result<SpectralTensor> {
    config.validate()?;
    let x = buffer.samples();
    if x.len() < config.window_length {
        return Err(Error::TooShort {
            len: x.len(),
            needed: config.window_length,
        });
    }
    let frames = config.frame_count(x.len());
    let bins = config.bins();
    let window = config.window.coefficients(config.window_length);
    let fft = FftPlanner::new().plan_fft_forward(config.dft_size);

    let rows = par::map_indexed(frames, exec, |f| {
        let start = f * config.hop_length;
        analyse_frame(&x[start..start + config.window_length], &window, &fft, config.dft_size, bins)
    });
    let mut values = Array2::zeros((frames, bins));
    for (mut row, spec) in values.rows_mut().into_iter().zip(rows) {
        row.assign(&ndarray::ArrayView1::from(&spec));
    }
    SpectralTensor::new(values, *config, buffer.sample_rate())
}

pub(crate) fn analyse_frame(
    segment: &[f64],
    window: &[f64],
    fft: &Arc<dyn Fft<f64>>,
    dft_size: usize,
    bins: usize,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); dft_size];
    for ((b, &s), &w) in buf.iter_mut().zip(segment).zip(window) {
        b.re = s * w;
    }
    fft.process(&mut buf);
    buf.truncate(bins);
    buf
}

/// Inverse DFT of a half spectrum into `buf` (real parts hold the frame,
/// already scaled by 1/n).
pub(crate) fn synthesise_frame(row: &[Complex64], ifft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
    let n = buf.len();
    // Hermitian extension of the half spectrum.
    for (k, b) in buf.iter_mut().enumerate() {
        *b = if k < row.len() { row[k] } else { row[n - k].conj() };
    }
    buf[0].im = 0.0;
    if n.is_multiple_of(2) {
        buf[n / 2].im = 0.0;
    }
    ifft.process(buf);
    let scale = 1.0 / n as f64;
    for b in buf.iter_mut() {
        b.re *= scale;
    }
}

/// Inverse STFT by weighted overlap-add with squared-window normalisation
/// (regularised at the outermost samples, see [`NORMALISE_FLOOR`]).
pub fn istft(spec: &SpectralTensor) -> Result<SampleBuffer> {
    let config = spec.config();
    config.check_invertible()?;
    let frames = spec.frames();
    let out_len = config.output_len(frames);
    let window = config.window.coefficients(config.window_length);
    let ifft = FftPlanner::new().plan_fft_inverse(config.dft_size);

    let mut out = vec![0.0; out_len];
    let mut envelope = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); config.dft_size];
    for (f, row) in spec.values().rows().into_iter().enumerate() {
        synthesise_frame(row.as_slice().expect("standard layout"), &ifft, &mut buf);
        let start = f * config.hop_length;
        for (i, &w) in window.iter().enumerate() {
            out[start + i] += buf[i].re * w;
            envelope[start + i] += w * w;
        }
    }
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    for (o, &e) in out.iter_mut().zip(&envelope) {
        *o /= e.max(NORMALISE_FLOOR * peak);
    }
    SampleBuffer::new(out, spec.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64) -> SampleBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampleBuffer::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000).unwrap()
    }

    #[test]
    fn framing_formula() {
        let b = SampleBuffer::zeros(480, 16000).unwrap();
        let s = stft(&b, &StftConfig::baseline()).unwrap();
        assert_eq!(s.frames(), 2);
        assert_eq!(s.bins(), 161);
    }

    #[test]
    fn halving_hop_doubles_frames_minus_one() {
        let b = random_signal(16000, 1);
        let a = stft(&b, &StftConfig::new(320, 160, 320, Window::Hann).unwrap()).unwrap();
        let c = stft(&b, &StftConfig::new(320, 80, 320, Window::Hann).unwrap()).unwrap();
        assert_eq!(c.frames() - 1, 2 * (a.frames() - 1));
    }

    #[test]
    fn too_short_signal() {
        let b = SampleBuffer::zeros(319, 16000).unwrap();
        assert!(matches!(
            stft(&b, &StftConfig::baseline()),
            Err(Error::TooShort { len: 319, needed: 320 })
        ));
    }

    #[test]
    fn invalid_configs() {
        assert!(StftConfig::new(320, 0, 320, Window::Hann).is_err());
        assert!(StftConfig::new(320, 400, 512, Window::Hann).is_err());
        assert!(StftConfig::new(512, 160, 320, Window::Hann).is_err());
    }

    #[test]
    fn zero_signal_zero_spectrum_and_back() {
        let b = SampleBuffer::zeros(1600, 16000).unwrap();
        let s = stft(&b, &StftConfig::baseline()).unwrap();
        assert!(s.values().iter().all(|c| c.norm() == 0.0));
        let y = istft(&s).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bin_centred_sinusoid_is_concentrated() {
        let cfg = StftConfig::new(320, 320, 320, Window::Rectangular).unwrap();
        let k = 17;
        let x: Vec<f64> = (0..320)
            .map(|n| (2.0 * PI * k as f64 * n as f64 / 320.0).cos())
            .collect();
        let s = stft(&SampleBuffer::new(x.clone(), 16000).unwrap(), &cfg).unwrap();
        // direct DFT sum oracle
        for bin in 0..cfg.bins() {
            let direct: Complex64 = x
                .iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (bin * n) as f64 / 320.0))
                .sum();
            assert!((direct - s.values()[[0, bin]]).norm() < 1e-9);
        }
        let peak = s.values()[[0, k]].norm();
        assert!((peak - 160.0).abs() < 1e-9);
        for bin in (0..cfg.bins()).filter(|&b| b != k) {
            assert!(s.values()[[0, bin]].norm() < 1e-9 * peak);
        }
    }

    #[test]
    fn parseval_single_rectangular_frame() {
        let cfg = StftConfig::new(256, 256, 256, Window::Rectangular).unwrap();
        let b = random_signal(256, 9);
        let s = stft(&b, &cfg).unwrap();
        let time: f64 = b.samples().iter().map(|v| v * v).sum();
        // fold the half spectrum back to the full one
        let row = s.values().row(0);
        let mut freq = row[0].norm_sqr() + row[128].norm_sqr();
        freq += 2.0 * (1..128).map(|k| row[k].norm_sqr()).sum::<f64>();
        assert!(((freq / 256.0) - time).abs() < 1e-9 * time);
    }

    #[test]
    fn single_frame_identity_config() {
        let cfg = StftConfig::new(64, 64, 64, Window::Rectangular).unwrap();
        let b = random_signal(64, 3);
        let y = istft(&stft(&b, &cfg).unwrap()).unwrap();
        for (a, b) in b.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hann_with_full_hop_is_rejected() {
        let cfg = StftConfig::new(320, 320, 320, Window::Hann).unwrap();
        let s = stft(&random_signal(1280, 2), &cfg).unwrap();
        assert!(matches!(istft(&s), Err(Error::Config(_))));
    }

    #[test]
    fn reconstruction_with_zero_padded_dft() {
        let cfg = StftConfig::new(320, 160, 512, Window::Hann).unwrap();
        let b = random_signal(4000, 5);
        let y = istft(&stft(&b, &cfg).unwrap()).unwrap();
        for i in 160..y.len() - 160 {
            assert!((b.samples()[i] - y.samples()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn sequential_and_parallel_frames_match() {
        let b = random_signal(8000, 4);
        let cfg = StftConfig::baseline();
        let a = stft_with(&b, &cfg, Execution::Auto).unwrap();
        let c = stft_with(&b, &cfg, Execution::Sequential).unwrap();
        assert_eq!(a, c);
    }
}
