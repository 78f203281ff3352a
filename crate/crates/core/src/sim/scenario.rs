//! Synthetic echo scenarios.
//!
//! A scenario is a 10 s far-end clip from one speaker, a 3-7 s near-end clip
//! from another speaker placed somewhere in a 10 s zero-padded buffer, an echo
//! made by (optionally) distorting the far end and convolving it with a room
//! impulse response, and the microphone mix of echo and near end at a random
//! signal-to-echo ratio. Half the scenarios carry background noise.
//!
//! Every random choice is drawn from the ChaCha stream keyed by
//! `(spec.seed, index)`, so a scenario depends only on its index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{conform, RirSource, Sources};
use super::mix::{level_scale, mix_at_snr};
use super::nonlinear::{apply_nonlinear, Nonlinearity};
use super::rir::{convolve_rir, Rir};
use super::rng::{child, scenario_rng, SimRng};
use super::rt60::estimate_rt60;
use crate::audio::SampleBuffer;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Mixes are scaled jointly so the loudest of the four signals peaks here.
const PEAK_LIMIT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Far end and near end both active.
    #[default]
    DoubleTalk,
    /// No near-end talker; the microphone carries only echo (plus noise).
    FarEndSingleTalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

/// Parameters of the generator. Defaults reproduce the synthetic training set
/// recipe at 16 kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub sample_rate: u32,
    pub kind: ScenarioKind,
    pub farend_duration_s: f64,
    pub nearend_duration_range_s: [f64; 2],
    pub ser_range_db: [f64; 2],
    pub snr_range_db: [f64; 2],
    pub nonlinear_probability: f64,
    pub noisy_probability: f64,
    pub rt60_range_s: [f64; 2],
    /// Clip level range for the hard-clipping distortion.
    pub clip_fraction_range: [f64; 2],
    /// Upper bound of the synthetic direct-path delay.
    pub max_direct_delay_ms: f64,
    /// Scenarios with `index < validation_count` are marked for validation.
    pub validation_count: u64,
    /// Draw validation scenarios from a separate subset of speakers and
    /// impulse-response files when the pools are large enough.
    pub disjoint_validation: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            sample_rate: 16000,
            kind: ScenarioKind::DoubleTalk,
            farend_duration_s: 10.0,
            nearend_duration_range_s: [3.0, 7.0],
            ser_range_db: [-10.0, 10.0],
            snr_range_db: [0.0, 40.0],
            nonlinear_probability: 0.8,
            noisy_probability: 0.5,
            rt60_range_s: [0.2, 1.2],
            clip_fraction_range: [0.3, 0.9],
            max_direct_delay_ms: 5.0,
            validation_count: 500,
            disjoint_validation: true,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        for (name, p) in [
            ("nonlinear_probability", self.nonlinear_probability),
            ("noisy_probability", self.noisy_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        for (name, [lo, hi]) in [
            ("nearend_duration_range_s", self.nearend_duration_range_s),
            ("ser_range_db", self.ser_range_db),
            ("snr_range_db", self.snr_range_db),
            ("rt60_range_s", self.rt60_range_s),
            ("clip_fraction_range", self.clip_fraction_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} [{lo}, {hi}] is not an ordered range"));
            }
        }
        if !(self.farend_duration_s > 0.0) {
            return bad("farend_duration_s must be positive".into());
        }
        if self.nearend_duration_range_s[0] <= 0.0
            || self.nearend_duration_range_s[1] > self.farend_duration_s
        {
            return bad("near-end durations must lie in (0, farend_duration_s]".into());
        }
        if self.rt60_range_s[0] <= 0.0 {
            return bad("rt60 must be positive".into());
        }
        if self.clip_fraction_range[0] <= 0.0 || self.clip_fraction_range[1] > 1.0 {
            return bad("clip fractions must lie in (0, 1]".into());
        }
        if !(self.max_direct_delay_ms >= 0.0) {
            return bad("max_direct_delay_ms must be non-negative".into());
        }
        Ok(())
    }

    pub fn clip_len(&self) -> usize {
        (self.farend_duration_s * self.sample_rate as f64).round() as usize
    }

    pub fn split_of(&self, index: u64) -> Split {
        if index < self.validation_count {
            Split::Validation
        } else {
            Split::Train
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    /// `None` for far-end single talk, where there is no near-end reference.
    pub ser_db: Option<f64>,
    pub snr_db: Option<f64>,
    /// Target RT60 for synthetic responses, estimate for file responses
    /// (`None` when the estimate fails).
    pub rt60_s: Option<f64>,
    pub nonlinear: Option<Nonlinearity>,
    pub delay_samples: usize,
    pub split: Split,
    pub farend_speaker: String,
    pub nearend_speaker: Option<String>,
    /// First sample and length of the near-end talk inside the padded buffer.
    pub nearend_start: usize,
    pub nearend_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub id: String,
    pub seed: u64,
    pub index: u64,
    pub farend: SampleBuffer,
    /// Echo exactly as it appears in `mic`.
    pub echo: SampleBuffer,
    /// Clean, zero-padded near-end speech (the training target).
    pub nearend: SampleBuffer,
    pub mic: SampleBuffer,
    pub metadata: ScenarioMetadata,
}

pub fn scenario_id(index: u64) -> String {
    format!("fileid_{index}")
}

/// Speaker indices eligible for a split.
fn speaker_pool(count: usize, split: Split, disjoint: bool) -> Vec<usize> {
    let validation: Vec<usize> = (0..count).filter(|i| i % 5 == 0).collect();
    if !disjoint || validation.len() < 2 || count - validation.len() < 2 {
        return (0..count).collect();
    }
    match split {
        Split::Validation => validation,
        Split::Train => (0..count).filter(|i| i % 5 != 0).collect(),
    }
}

fn uniform(rng: &mut SimRng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// `len` samples from a random position of `clip`; zero-padded if the clip is short.
fn take_segment(clip: &SampleBuffer, len: usize, rng: &mut SimRng) -> Vec<f64> {
    let x = clip.samples();
    if x.len() >= len {
        let start = rng.random_range(0..=x.len() - len);
        x[start..start + len].to_vec()
    } else {
        let mut v = x.to_vec();
        v.resize(len, 0.0);
        v
    }
}

fn pick_speech(sources: &Sources, pool: &[usize], rate: u32, len: usize, rng: &mut SimRng) -> Result<(usize, Vec<f64>)> {
    let speaker = pool[rng.random_range(0..pool.len())];
    let clips = sources.speech.clip_count(speaker);
    if clips == 0 {
        return Err(Error::Corpus(format!(
            "speaker {} has no clips",
            sources.speech.speakers()[speaker]
        )));
    }
    let clip = rng.random_range(0..clips);
    let audio = sources.speech.clip(speaker, clip)?;
    let audio = conform((*audio).clone(), rate)?;
    Ok((speaker, take_segment(&audio, len, rng)))
}

struct EchoPath {
    rir: Rir,
    rt60_s: Option<f64>,
    delay_samples: usize,
}

fn draw_echo_path(spec: &ScenarioSpec, sources: &Sources, split: Split, rng: &mut SimRng) -> Result<EchoPath> {
    match &sources.rirs {
        RirSource::Synthetic => {
            let rt60 = uniform(rng, spec.rt60_range_s);
            let max_delay = (spec.max_direct_delay_ms * spec.sample_rate as f64 / 1000.0).round() as usize;
            let delay = rng.random_range(0..=max_delay);
            let mut tail_rng = child(rng);
            let rir = Rir::synthetic(rt60, spec.sample_rate, delay, &mut tail_rng)?;
            Ok(EchoPath {
                rir,
                rt60_s: Some(rt60),
                delay_samples: delay,
            })
        }
        RirSource::Files(files) => {
            let pool = speaker_pool(files.len(), split, spec.disjoint_validation);
            let pick = pool[rng.random_range(0..pool.len())];
            let rir = sources.rirs.load(pick, spec.sample_rate)?;
            Ok(EchoPath {
                rt60_s: estimate_rt60(&rir).ok(),
                delay_samples: rir.peak_index(),
                rir,
            })
        }
    }
}

/// Builds scenario `index`. Pure in `(spec, sources, index)`.
pub fn generate_scenario(spec: &ScenarioSpec, sources: &Sources, index: u64) -> Result<ScenarioRecord> {
    spec.validate()?;
    let speakers = sources.speech.speakers().len();
    if speakers == 0 {
        return Err(Error::Corpus("speech corpus is empty".into()));
    }
    let need_two = spec.kind == ScenarioKind::DoubleTalk;
    if need_two && speakers < 2 {
        return Err(Error::Corpus("need at least two distinct speakers".into()));
    }
    let rate = spec.sample_rate;
    let len = spec.clip_len();
    let split = spec.split_of(index);
    let pool = speaker_pool(speakers, split, spec.disjoint_validation);
    let mut rng = scenario_rng(spec.seed, index);

    // far end
    let (far_speaker, far) = pick_speech(sources, &pool, rate, len, &mut rng)?;

    // near end, from a different speaker
    let mut near_speaker = None;
    let mut near = vec![0.0; len];
    let (mut near_start, mut near_len) = (0, 0);
    if need_two {
        let others: Vec<usize> = pool.iter().copied().filter(|&s| s != far_speaker).collect();
        let duration = uniform(&mut rng, spec.nearend_duration_range_s);
        near_len = ((duration * rate as f64).round() as usize).min(len);
        let (speaker, segment) = pick_speech(sources, &others, rate, near_len, &mut rng)?;
        near_start = rng.random_range(0..=len - near_len);
        near[near_start..near_start + near_len].copy_from_slice(&segment);
        near_speaker = Some(speaker);
    }

    let nonlinear = if rng.random_bool(spec.nonlinear_probability) {
        Some(if rng.random_bool(0.5) {
            Nonlinearity::clip(uniform(&mut rng, spec.clip_fraction_range))
        } else {
            Nonlinearity::sigmoid()
        })
    } else {
        None
    };
    let snr_db = if rng.random_bool(spec.noisy_probability) {
        Some(uniform(&mut rng, spec.snr_range_db))
    } else {
        None
    };
    let ser_db = uniform(&mut rng, spec.ser_range_db);
    let path = draw_echo_path(spec, sources, split, &mut rng)?;
    let mut noise_rng = child(&mut rng);

    let mut far = SampleBuffer::new(far, rate)?;
    let near = SampleBuffer::new(near, rate)?;
    let mut near_noise = None;
    if let Some(snr) = snr_db {
        let far_noise = sources.noise.draw(len, rate, &mut noise_rng)?;
        far = mix_at_snr(&far, &far_noise, snr)?;
        if need_two {
            let n = sources.noise.draw(len, rate, &mut noise_rng)?;
            let scale = level_scale(&near, &n, snr)?;
            near_noise = Some(n.samples().iter().map(|v| v * scale).collect::<Vec<_>>());
        }
    }

    let driven = match &nonlinear {
        Some(nl) => apply_nonlinear(&far, nl)?,
        None => far.clone(),
    };
    let echo_raw = convolve_rir(&driven, &path.rir)?;
    let echo_scale = if need_two {
        level_scale(&near, &echo_raw, ser_db)?
    } else {
        1.0
    };
    let echo: Vec<f64> = echo_raw.samples().iter().map(|v| v * echo_scale).collect();
    let mut mic: Vec<f64> = near.samples().iter().zip(&echo).map(|(n, e)| n + e).collect();
    if let Some(noise) = &near_noise {
        mic.iter_mut().zip(noise).for_each(|(m, n)| *m += n);
    }

    let peak = [far.samples(), &echo, near.samples(), &mic]
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > PEAK_LIMIT { PEAK_LIMIT / peak } else { 1.0 };
    let scaled = |v: &[f64]| SampleBuffer::new(v.iter().map(|x| x * gain).collect(), rate);

    let names = sources.speech.speakers();
    Ok(ScenarioRecord {
        id: scenario_id(index),
        seed: spec.seed,
        index,
        farend: scaled(far.samples())?,
        echo: scaled(&echo)?,
        nearend: scaled(near.samples())?,
        mic: scaled(&mic)?,
        metadata: ScenarioMetadata {
            ser_db: need_two.then_some(ser_db),
            snr_db,
            rt60_s: path.rt60_s,
            nonlinear,
            delay_samples: path.delay_samples,
            split,
            farend_speaker: names[far_speaker].clone(),
            nearend_speaker: near_speaker.map(|s| names[s].clone()),
            nearend_start: near_start,
            nearend_len: near_len,
        },
    })
}

/// Generates `count` consecutive scenarios starting at `first`, in index order.
pub fn generate_batch(spec: &ScenarioSpec, sources: &Sources, first: u64, count: usize, exec: Execution) -> Result<Vec<ScenarioRecord>> {
    par::try_map_indexed(count, exec, |i| generate_scenario(spec, sources, first + i as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::mix::measured_ratio_db;

    fn sources() -> Sources {
        Sources::synthetic(6, 16000, 99)
    }

    #[test]
    fn deterministic_per_index() {
        let spec = ScenarioSpec { seed: 4, ..Default::default() };
        let s = sources();
        let a = generate_scenario(&spec, &s, 17).unwrap();
        let b = generate_scenario(&spec, &Sources::synthetic(6, 16000, 99), 17).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&spec, &s, 18).unwrap();
        assert_ne!(a.mic, c.mic);
    }

    #[test]
    fn shapes_and_mixing_identity() {
        let spec = ScenarioSpec { seed: 1, ..Default::default() };
        let s = sources();
        for index in 0..6 {
            let r = generate_scenario(&spec, &s, index).unwrap();
            for b in [&r.farend, &r.echo, &r.nearend, &r.mic] {
                assert_eq!(b.len(), 160_000);
                assert_eq!(b.sample_rate(), 16000);
                assert!(b.samples().iter().all(|v| v.abs() <= PEAK_LIMIT + 1e-12));
            }
            let m = &r.metadata;
            assert_ne!(Some(&m.farend_speaker), m.nearend_speaker.as_ref());
            assert!((48_000..=112_000).contains(&m.nearend_len));
            let first = r.nearend.samples().iter().position(|&v| v != 0.0).unwrap();
            let last = r.nearend.samples().iter().rposition(|&v| v != 0.0).unwrap();
            assert!(last - first + 1 <= 112_000 && last - first + 1 >= 47_000);
            let ser = measured_ratio_db(r.nearend.samples(), r.echo.samples());
            assert!((ser - m.ser_db.unwrap()).abs() < 1e-6);
            if m.snr_db.is_none() {
                for i in 0..r.mic.len() {
                    let sum = r.nearend.samples()[i] + r.echo.samples()[i];
                    assert!((r.mic.samples()[i] - sum).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_marking() {
        let spec = ScenarioSpec { seed: 2, validation_count: 3, ..Default::default() };
        let s = sources();
        let splits: Vec<Split> = (0..5)
            .map(|i| generate_scenario(&spec, &s, i).unwrap().metadata.split)
            .collect();
        assert_eq!(splits, [Split::Validation, Split::Validation, Split::Validation, Split::Train, Split::Train]);
    }

    #[test]
    fn disjoint_speaker_pools() {
        let s = Sources::synthetic(10, 16000, 5);
        let spec = ScenarioSpec { seed: 3, validation_count: 20, ..Default::default() };
        for i in 0..30 {
            let r = generate_scenario(&spec, &s, i).unwrap();
            let val = ["synth000", "synth005"].contains(&r.metadata.farend_speaker.as_str());
            assert_eq!(val, i < 20, "index {i} far {}", r.metadata.farend_speaker);
        }
    }

    #[test]
    fn far_end_single_talk() {
        let spec = ScenarioSpec { seed: 8, kind: ScenarioKind::FarEndSingleTalk, ..Default::default() };
        let r = generate_scenario(&spec, &sources(), 0).unwrap();
        assert!(r.nearend.samples().iter().all(|&v| v == 0.0));
        assert!(r.metadata.ser_db.is_none());
        assert!(r.echo.power() > 0.0);
    }

    #[test]
    fn single_speaker_corpus_is_rejected() {
        let s = Sources::synthetic(1, 16000, 1);
        let spec = ScenarioSpec::default();
        assert!(matches!(generate_scenario(&spec, &s, 0), Err(Error::Corpus(_))));
    }

    #[test]
    fn invalid_spec() {
        let spec = ScenarioSpec { noisy_probability: 1.5, ..Default::default() };
        assert!(spec.validate().is_err());
        let spec = ScenarioSpec { ser_range_db: [10.0, -10.0], ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn batch_matches_single_calls() {
        let spec = ScenarioSpec { seed: 6, ..Default::default() };
        let s = sources();
        let batch = generate_batch(&spec, &s, 10, 3, Execution::Auto).unwrap();
        for (i, r) in batch.iter().enumerate() {
            assert_eq!(*r, generate_scenario(&spec, &s, 10 + i as u64).unwrap());
        }
    }
}
