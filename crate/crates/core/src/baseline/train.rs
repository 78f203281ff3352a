use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::enhance::analyse;
use super::model::GruMaskModel;
use crate::audio::{stft, SampleBuffer, StftConfig};
use crate::error::{Error, Result};
use crate::sim::rng::scenario_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

/// One training clip: features, microphone magnitude and the clean near-end target.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub features: Array2<f64>,
    pub mic_mag: Array2<f64>,
    pub clean_mag: Array2<f64>,
}

impl TrainingExample {
    pub fn from_audio(mic: &SampleBuffer, far: &SampleBuffer, nearend: &SampleBuffer) -> Result<Self> {
        mic.check_compatible(nearend)?;
        let (mic_spec, features) = analyse(mic, far)?;
        let clean = stft(nearend, &StftConfig::baseline())?;
        Ok(Self {
            features,
            mic_mag: mic_spec.magnitude(),
            clean_mag: clean.magnitude(),
        })
    }
}

/// Full-clip BPTT with batch size one. Clip order is reshuffled each epoch
/// from `config.seed`. Returns the mean training loss of every epoch.
pub fn train(model: &mut GruMaskModel, examples: &[TrainingExample], config: &TrainConfig) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(Error::InsufficientData("no training examples".into()));
    }
    config.adam.validate()?;
    let mut state = AdamState::for_model(model, config.adam);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut scenario_rng(config.seed, epoch as u64));
        let mut total = 0.0;
        for &i in &order {
            let ex = &examples[i];
            let (loss, grads) = model.backward(ex.features.view(), ex.mic_mag.view(), ex.clean_mag.view())?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            state.step_model(model, &grads)?;
            total += loss;
        }
        let mean = total / examples.len() as f64;
        log::info!("epoch {} mean loss {mean:.6}", epoch + 1);
        curve.push(mean);
    }
    Ok(curve)
}

/// `epoch,mean_loss` with epochs counted from 1.
pub fn write_loss_csv(path: &Path, curve: &[f64]) -> Result<()> {
    let mut text = String::from("epoch,mean_loss\n");
    for (i, loss) in curve.iter().enumerate() {
        text.push_str(&format!("{},{loss:.17e}\n", i + 1));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
