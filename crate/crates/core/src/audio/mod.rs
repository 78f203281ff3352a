//! Audio containers, WAV I/O, integer-factor resampling and STFT framing.

mod resample;
mod stft;
mod wav;

pub use resample::{resample, Resampler, TAPS_PER_PHASE};
pub use stft::{istft, stft, stft_with, SpectralTensor, StftConfig, Window};
pub(crate) use stft::{analyse_frame, synthesise_frame, NORMALISE_FLOOR};
pub use wav::{read_wav, write_wav, WriteReport};

use crate::error::{Error, Result};

/// Mono audio at a fixed sample rate. Amplitudes are nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Parameter("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    /// Copies `[start, end)` into a new buffer.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        self.with_samples(self.samples[start..end].to_vec())
    }

    /// Mean of squared samples; zero for an empty buffer.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }

    pub(crate) fn check_compatible(&self, other: &SampleBuffer) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(self.sample_rate, other.sample_rate));
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}
