use std::path::Path;

use aeckit::audio::{read_wav, resample};
use aeckit::baseline::BASELINE_RATE;
use aeckit::SampleBuffer;

use crate::failure::Failure;

/// Reads a WAV and brings it to the model's operating rate.
pub(crate) fn read_at_model_rate(path: &Path) -> Result<SampleBuffer, Failure> {
    let buffer = read_wav(path)?;
    if buffer.sample_rate() == BASELINE_RATE {
        Ok(buffer)
    } else {
        Ok(resample(&buffer, BASELINE_RATE)?)
    }
}

/// Zero-pads or truncates to `len` samples.
pub(crate) fn fit_length(buffer: SampleBuffer, len: usize) -> SampleBuffer {
    let rate = buffer.sample_rate();
    let mut samples = buffer.into_samples();
    samples.resize(len, 0.0);
    SampleBuffer::new(samples, rate).expect("rate already validated")
}

pub(crate) fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}
