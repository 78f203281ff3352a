//! Source material for scenario synthesis: speech, noise and impulse responses.
//!
//! Speech comes either from a folder of WAV files named `<speaker>_<rest>.wav`
//! (speaker identity is the text before the first underscore) or from a
//! procedural generator that needs no data at all. Noise and impulse responses
//! follow the same pattern.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;

use super::rir::Rir;
use super::rng::{scenario_rng, SimRng};
use crate::audio::{read_wav, resample, SampleBuffer};
use crate::error::{Error, Result};

/// A pool of speech clips grouped by speaker.
pub trait SpeechCorpus: Send + Sync {
    fn speakers(&self) -> &[String];
    fn clip_count(&self, speaker: usize) -> usize;
    fn clip(&self, speaker: usize, clip: usize) -> Result<Arc<SampleBuffer>>;
}

/// Speech WAVs in one directory, grouped by filename prefix.
#[derive(Debug)]
pub struct WavCorpus {
    speakers: Vec<String>,
    files: Vec<Vec<PathBuf>>,
}

impl WavCorpus {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let mut by_speaker: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
        for path in wav_files(dir.as_ref())? {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let speaker = stem.split('_').next().unwrap_or(stem).to_string();
            by_speaker.entry(speaker).or_default().push(path);
        }
        if by_speaker.is_empty() {
            return Err(Error::Corpus(format!("no .wav files in {}", dir.as_ref().display())));
        }
        let (speakers, files) = by_speaker.into_iter().unzip();
        Ok(Self { speakers, files })
    }
}

impl SpeechCorpus for WavCorpus {
    fn speakers(&self) -> &[String] {
        &self.speakers
    }

    fn clip_count(&self, speaker: usize) -> usize {
        self.files[speaker].len()
    }

    fn clip(&self, speaker: usize, clip: usize) -> Result<Arc<SampleBuffer>> {
        Ok(Arc::new(read_wav(&self.files[speaker][clip])?))
    }
}

/// Sorted list of `*.wav` files directly inside `dir`.
pub fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Voice {
    f0: f64,
    formants: [(f64, f64); 3],
    tilt: f64,
}

/// Procedural speech-like signals: harmonic syllables with speaker-specific
/// pitch and formants, separated by pauses and occasional fricative bursts.
/// Clips are generated lazily and cached.
pub struct SyntheticSpeech {
    seed: u64,
    sample_rate: u32,
    clip_seconds: f64,
    clips_per_speaker: usize,
    speakers: Vec<String>,
    voices: Vec<Voice>,
    cache: Vec<OnceLock<Arc<SampleBuffer>>>,
}

impl SyntheticSpeech {
    pub fn new(speakers: usize, clips_per_speaker: usize, clip_seconds: f64, sample_rate: u32, seed: u64) -> Self {
        let voices = (0..speakers)
            .map(|s| {
                let mut rng = scenario_rng(seed, s as u64);
                Voice {
                    f0: rng.random_range(85.0..250.0),
                    formants: [
                        (rng.random_range(300.0..850.0), 90.0),
                        (rng.random_range(900.0..2300.0), 120.0),
                        (rng.random_range(2300.0..3300.0), 200.0),
                    ],
                    tilt: rng.random_range(0.6..1.2),
                }
            })
            .collect();
        Self {
            seed,
            sample_rate,
            clip_seconds,
            clips_per_speaker,
            speakers: (0..speakers).map(|s| format!("synth{s:03}")).collect(),
            voices,
            cache: (0..speakers * clips_per_speaker).map(|_| OnceLock::new()).collect(),
        }
    }

    fn render(&self, speaker: usize, clip: usize) -> SampleBuffer {
        let voice = self.voices[speaker];
        let fs = self.sample_rate as f64;
        let len = (self.clip_seconds * fs) as usize;
        let mut rng = scenario_rng(self.seed ^ 0x5eec_5eec, (speaker * self.clips_per_speaker + clip) as u64);
        let mut out = vec![0.0; len];
        let top = 4000f64.min(0.45 * fs);
        let mut pos = rng.random_range(0..(0.2 * fs) as usize);
        while pos < len {
            let syl = (rng.random_range(0.12..0.35) * fs) as usize;
            let end = (pos + syl).min(len);
            let f0 = voice.f0 * rng.random_range(0.85..1.2);
            let glide: f64 = rng.random_range(-0.25..0.25);
            let level = rng.random_range(0.25..0.8);
            let voiced = rng.random_bool(0.8);
            let harmonics: Vec<f64> = (1..)
                .map(|k| k as f64)
                .take_while(|k| k * f0 * (1.0 + glide.max(0.0)) < top)
                .map(|k| {
                    let fk = k * f0;
                    voice
                        .formants
                        .iter()
                        .map(|&(fc, bw)| 1.0 / (1.0 + ((fk - fc) / bw).powi(2)))
                        .sum::<f64>()
                        / k.powf(voice.tilt)
                })
                .collect();
            let mut phase = 0.0;
            for (i, o) in out[pos..end].iter_mut().enumerate() {
                let t = i as f64 / syl as f64;
                let env = (PI * t).sin().powf(0.7) * level;
                if voiced {
                    phase += 2.0 * PI * f0 * (1.0 + glide * t) / fs;
                    let s: f64 = harmonics
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * ((k + 1) as f64 * phase).sin())
                        .sum();
                    *o = 0.12 * env * s;
                } else {
                    let g: f64 = rng.sample(StandardNormal);
                    *o = 0.05 * env * g;
                }
            }
            let gap = if rng.random_bool(0.15) {
                rng.random_range(0.3..0.7)
            } else {
                rng.random_range(0.03..0.2)
            };
            pos = end + (gap * fs) as usize;
        }
        // low-level breath noise so no sample is exactly silent
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o += 1e-4 * g;
        }
        SampleBuffer::new(out, self.sample_rate).expect("positive rate")
    }
}

impl SpeechCorpus for SyntheticSpeech {
    fn speakers(&self) -> &[String] {
        &self.speakers
    }

    fn clip_count(&self, _speaker: usize) -> usize {
        self.clips_per_speaker
    }

    fn clip(&self, speaker: usize, clip: usize) -> Result<Arc<SampleBuffer>> {
        let slot = &self.cache[speaker * self.clips_per_speaker + clip];
        Ok(slot.get_or_init(|| Arc::new(self.render(speaker, clip))).clone())
    }
}

/// Background noise for the noisy half of the scenarios.
pub enum NoiseSource {
    /// Coloured Gaussian noise drawn per scenario.
    Synthetic,
    Files(Vec<PathBuf>),
}

impl NoiseSource {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let files = wav_files(dir.as_ref())?;
        if files.is_empty() {
            return Err(Error::Corpus(format!("no noise .wav files in {}", dir.as_ref().display())));
        }
        Ok(NoiseSource::Files(files))
    }

    /// `len` samples at `sample_rate`.
    pub fn draw(&self, len: usize, sample_rate: u32, rng: &mut SimRng) -> Result<SampleBuffer> {
        match self {
            NoiseSource::Synthetic => {
                // one-pole low-pass of white noise plus a faint mains hum
                let pole: f64 = rng.random_range(0.0..0.95);
                let hum_hz = if rng.random_bool(0.5) { 50.0 } else { 60.0 };
                let hum = rng.random_range(0.0..0.3);
                let mut state = 0.0;
                let samples = (0..len)
                    .map(|n| {
                        let g: f64 = rng.sample(StandardNormal);
                        state = pole * state + (1.0 - pole) * g;
                        state + hum * (2.0 * PI * hum_hz * n as f64 / sample_rate as f64).sin()
                    })
                    .collect();
                SampleBuffer::new(samples, sample_rate)
            }
            NoiseSource::Files(files) => {
                let path = &files[rng.random_range(0..files.len())];
                let clip = conform(read_wav(path)?, sample_rate)?;
                if clip.is_empty() {
                    return Err(Error::Corpus(format!("{} is empty", path.display())));
                }
                let start = rng.random_range(0..clip.len());
                // loop the file when it is shorter than the request
                let samples = (0..len).map(|i| clip.samples()[(start + i) % clip.len()]).collect();
                SampleBuffer::new(samples, sample_rate)
            }
        }
    }
}

/// Echo paths.
pub enum RirSource {
    /// Parametric exponential-decay responses with RT60 drawn per scenario.
    Synthetic,
    Files(Vec<PathBuf>),
}

impl RirSource {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let files = wav_files(dir.as_ref())?;
        if files.is_empty() {
            return Err(Error::Corpus(format!("no impulse responses in {}", dir.as_ref().display())));
        }
        Ok(RirSource::Files(files))
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            RirSource::Synthetic => None,
            RirSource::Files(f) => Some(f.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn load(&self, index: usize, sample_rate: u32) -> Result<Rir> {
        match self {
            RirSource::Synthetic => Err(Error::Corpus("synthetic source has no files".into())),
            RirSource::Files(files) => {
                let b = conform(read_wav(&files[index])?, sample_rate)?;
                Rir::new(b.into_samples(), sample_rate)
            }
        }
    }
}

/// Everything the scenario generator draws from.
pub struct Sources {
    pub speech: Arc<dyn SpeechCorpus>,
    pub noise: NoiseSource,
    pub rirs: RirSource,
}

impl Sources {
    /// Fully procedural sources: `speakers` synthetic voices, three 12 s clips each.
    pub fn synthetic(speakers: usize, sample_rate: u32, seed: u64) -> Self {
        Self {
            speech: Arc::new(SyntheticSpeech::new(speakers, 3, 12.0, sample_rate, seed)),
            noise: NoiseSource::Synthetic,
            rirs: RirSource::Synthetic,
        }
    }
}

/// Resamples to `rate` when the file was recorded at a different integer-related rate.
pub(crate) fn conform(buffer: SampleBuffer, rate: u32) -> Result<SampleBuffer> {
    if buffer.sample_rate() == rate {
        Ok(buffer)
    } else {
        resample(&buffer, rate)
    }
}
