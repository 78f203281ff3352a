use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::SampleBuffer;
use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

/// Side report from [`write_wav`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Samples outside `[-1, 1]` that were hard-clipped.
    pub clipped: usize,
}

/// Reads 16-bit PCM or 32-bit float RIFF/WAVE. Only channel 0 is kept.
pub fn read_wav(path: impl AsRef<Path>) -> Result<SampleBuffer> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(std::io::BufReader::new(file))
}

pub(crate) fn decode<R: Read>(reader: R) -> Result<SampleBuffer> {
    let reader = hound::WavReader::new(reader).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "{bits}-bit {fmt:?} samples"
            )))
        }
    };
    SampleBuffer::new(samples, spec.sample_rate)
        .map_err(|_| Error::Format("sample rate of 0 in header".into()))
}

/// Writes mono 16-bit PCM, hard-clipping anything outside `[-1, 1]`.
pub fn write_wav(buffer: &SampleBuffer, path: impl AsRef<Path>) -> Result<WriteReport> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let report = encode(buffer, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Format(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })?;
    if report.clipped > 0 {
        log::warn!("{}: {} samples clipped", path.display(), report.clipped);
    }
    Ok(report)
}

pub(crate) fn encode<W: Write + Seek>(buffer: &SampleBuffer, writer: W) -> Result<WriteReport> {
    if !buffer.is_finite() {
        return Err(Error::NonFinite("wav samples"));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = hound::WavWriter::new(writer, spec).map_err(map_hound)?;
    let mut report = WriteReport::default();
    for &x in buffer.samples() {
        if !(-1.0..=1.0).contains(&x) {
            report.clipped += 1;
        }
        w.write_sample(quantize(x)).map_err(map_hound)?;
    }
    w.finalize().map_err(map_hound)?;
    Ok(report)
}

fn quantize(x: f64) -> i16 {
    (x * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io("<wav stream>", io),
        hound::Error::Unsupported => Error::UnsupportedFormat("codec not supported".into()),
        hound::Error::FormatError(msg) => Error::Format(msg.to_string()),
        other => Error::Format(other.to_string()),
    }
}
