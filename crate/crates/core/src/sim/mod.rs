//! Synthetic echo-scenario generation, test-set style degradations and
//! reverberation-time estimation.

mod corpus;
mod degrade;
mod manifest;
mod mix;
mod nonlinear;
mod rir;
mod rt60;
pub mod rng;
mod scenario;

pub use corpus::{wav_files, NoiseSource, RirSource, Sources, SpeechCorpus, SyntheticSpeech, WavCorpus};
pub use degrade::{inject_delay, inject_gain_step, inject_glitches};
pub use manifest::{read_manifest, write_manifest, write_record, ManifestEntry, ScenarioAudio};
pub use mix::{active_powers, level_scale, measured_ratio_db, mix_at_ser, mix_at_snr};
pub use nonlinear::{apply_nonlinear, NonlinearKind, Nonlinearity};
pub use rir::{convolve_rir, Rir, DECAY_PER_RT60};
pub use rt60::{energy_decay_curve, estimate_rt60};
pub use scenario::{
    generate_batch, generate_scenario, scenario_id, ScenarioKind, ScenarioMetadata, ScenarioRecord,
    ScenarioSpec, Split,
};
