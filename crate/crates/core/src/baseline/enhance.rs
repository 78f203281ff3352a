use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::features::{features, frame_features};
use super::model::{mask_value, GruMaskModel};
use crate::audio::{
    analyse_frame, istft, stft, synthesise_frame, SampleBuffer, SpectralTensor, StftConfig, NORMALISE_FLOOR,
};
use crate::error::{Error, Result};

/// Rate the baseline framing (20 ms windows, 320-point DFT) is built for.
pub const BASELINE_RATE: u32 = 16_000;

fn check_inputs(mic: &SampleBuffer, far: &SampleBuffer) -> Result<()> {
    if mic.sample_rate() != BASELINE_RATE {
        return Err(Error::SampleRateMismatch(BASELINE_RATE, mic.sample_rate()));
    }
    mic.check_compatible(far)
}

/// Spectra of microphone and far end plus the model features built from them.
pub fn analyse(mic: &SampleBuffer, far: &SampleBuffer) -> Result<(SpectralTensor, Array2<f64>)> {
    check_inputs(mic, far)?;
    let config = StftConfig::baseline();
    let mic_spec = stft(mic, &config)?;
    let far_spec = stft(far, &config)?;
    let feats = features(&mic_spec, &far_spec)?;
    Ok((mic_spec, feats))
}

/// Scales each bin of `mic` by `mask` (keeping the microphone phase) and resynthesises.
pub fn apply_mask(mic: &SpectralTensor, mask: ArrayView2<f64>) -> Result<SampleBuffer> {
    if mask.dim() != mic.values().dim() {
        return Err(Error::Config(format!(
            "mask is {:?}, spectrum {:?}",
            mask.dim(),
            mic.values().dim()
        )));
    }
    let values = mic.values() * &mask.mapv(|m| Complex64::new(m, 0.0));
    istft(&SpectralTensor::new(values, *mic.config(), mic.sample_rate())?)
}

/// Offline enhancement of a whole clip. The output covers the samples spanned
/// by complete STFT frames.
pub fn enhance(model: &GruMaskModel, mic: &SampleBuffer, far: &SampleBuffer) -> Result<SampleBuffer> {
    let (mic_spec, feats) = analyse(mic, far)?;
    let mask = model.forward(feats.view())?;
    apply_mask(&mic_spec, mask.view())
}

/// Hop-by-hop enhancer carrying recurrent state between calls. Produces the
/// same samples as [`enhance`], one hop behind the input.
pub struct StreamingEnhancer<'m> {
    model: &'m GruMaskModel,
    config: StftConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    mic: Vec<f64>,
    far: Vec<f64>,
    received: usize,
    hidden: Vec<Array1<f64>>,
    scratch: Array1<f64>,
    feats: Array1<f64>,
    logits: Array1<f64>,
    spectrum: Vec<Complex64>,
    ola: Vec<f64>,
    envelope: Vec<f64>,
    floor: f64,
}

impl<'m> StreamingEnhancer<'m> {
    pub fn new(model: &'m GruMaskModel) -> Result<Self> {
        let config = StftConfig::baseline();
        let dims = model.dims();
        if dims.bins != config.bins() || dims.input != 2 * config.bins() {
            return Err(Error::Config(format!(
                "model dims {dims:?} do not match {} STFT bins",
                config.bins()
            )));
        }
        let window = config.window.coefficients(config.window_length);
        let mut planner = FftPlanner::new();
        let peak = (0..config.hop_length)
            .map(|n| {
                (n..config.window_length)
                    .step_by(config.hop_length)
                    .map(|i| window[i] * window[i])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        Ok(Self {
            model,
            fft: planner.plan_fft_forward(config.dft_size),
            ifft: planner.plan_fft_inverse(config.dft_size),
            mic: vec![0.0; config.window_length],
            far: vec![0.0; config.window_length],
            received: 0,
            hidden: vec![Array1::zeros(dims.hidden); dims.layers],
            scratch: Array1::zeros(6 * dims.hidden),
            feats: Array1::zeros(dims.input),
            logits: Array1::zeros(dims.bins),
            spectrum: vec![Complex64::new(0.0, 0.0); config.dft_size],
            ola: vec![0.0; config.window_length],
            envelope: vec![0.0; config.window_length],
            floor: NORMALISE_FLOOR * peak,
            window,
            config,
        })
    }

    pub fn hop_length(&self) -> usize {
        self.config.hop_length
    }

    /// Consumes one hop of microphone and far-end samples and appends the
    /// finished output hop to `out` once a full window has arrived.
    pub fn process_hop(&mut self, mic: &[f64], far: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let hop = self.config.hop_length;
        let win = self.config.window_length;
        if mic.len() != hop || far.len() != hop {
            return Err(Error::LengthMismatch(hop, mic.len().min(far.len())));
        }
        self.mic.copy_within(hop.., 0);
        self.mic[win - hop..].copy_from_slice(mic);
        self.far.copy_within(hop.., 0);
        self.far[win - hop..].copy_from_slice(far);
        self.received += hop;
        if self.received < win {
            return Ok(());
        }

        let bins = self.config.bins();
        let n = self.config.dft_size;
        let mic_spec = analyse_frame(&self.mic, &self.window, &self.fft, n, bins);
        let far_spec = analyse_frame(&self.far, &self.window, &self.fft, n, bins);
        frame_features(
            ndarray::ArrayView1::from(&mic_spec),
            ndarray::ArrayView1::from(&far_spec),
            &mut self.feats.view_mut(),
        );
        if self.feats.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("streamed input"));
        }
        let mut input = self.feats.view();
        for (layer, h) in self.model.layers().iter().zip(self.hidden.iter_mut()) {
            layer.step(input, h, &mut self.scratch);
            input = h.view();
        }
        self.logits.assign(self.model.head_bias());
        ndarray::linalg::general_mat_vec_mul(1.0, self.model.head_weight(), &input, 1.0, &mut self.logits);

        let row: Vec<Complex64> = mic_spec
            .iter()
            .zip(self.logits.iter())
            .map(|(x, &l)| x * mask_value(l))
            .collect();
        synthesise_frame(&row, &self.ifft, &mut self.spectrum);
        for (i, &w) in self.window.iter().enumerate() {
            self.ola[i] += self.spectrum[i].re * w;
            self.envelope[i] += w * w;
        }
        out.extend(
            self.ola[..hop]
                .iter()
                .zip(&self.envelope[..hop])
                .map(|(&o, &e)| o / e.max(self.floor)),
        );
        self.ola.copy_within(hop.., 0);
        self.ola[win - hop..].fill(0.0);
        self.envelope.copy_within(hop.., 0);
        self.envelope[win - hop..].fill(0.0);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::ModelDims;
    use rand::Rng;

    fn noise(len: usize, seed: u64) -> SampleBuffer {
        let mut rng = crate::sim::rng::scenario_rng(seed, 0);
        SampleBuffer::new((0..len).map(|_| rng.random_range(-0.5..0.5)).collect(), BASELINE_RATE).unwrap()
    }

    #[test]
    fn unit_mask_reconstructs() {
        let mic = noise(16000, 1);
        let spec = stft(&mic, &StftConfig::baseline()).unwrap();
        let ones = Array2::from_elem(spec.values().dim(), 1.0);
        let out = apply_mask(&spec, ones.view()).unwrap();
        let direct = istft(&spec).unwrap();
        assert_eq!(out.samples(), direct.samples());
        for i in 160..out.len() - 160 {
            assert!((out.samples()[i] - mic.samples()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mask_silences() {
        let mic = noise(4000, 2);
        let spec = stft(&mic, &StftConfig::baseline()).unwrap();
        let zeros = Array2::zeros(spec.values().dim());
        assert!(apply_mask(&spec, zeros.view()).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn suppresses_every_bin() {
        let model = GruMaskModel::baseline(3);
        let (mic, far) = (noise(8000, 3), noise(8000, 4));
        let (spec, feats) = analyse(&mic, &far).unwrap();
        let mask = model.forward(feats.view()).unwrap();
        let mag = spec.magnitude();
        for (m, x) in mask.iter().zip(mag.iter()) {
            if *x > 0.0 {
                assert!(m * x < *x);
            }
        }
    }

    #[test]
    fn silence_stays_silent() {
        let model = GruMaskModel::baseline(1);
        let z = SampleBuffer::zeros(16000, BASELINE_RATE).unwrap();
        let out = enhance(&model, &z, &z).unwrap();
        assert_eq!(out.len(), 16000);
        assert!(out.samples().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_other_rates_and_lengths() {
        let model = GruMaskModel::baseline(1);
        let a = SampleBuffer::zeros(4800, 48000).unwrap();
        assert!(matches!(enhance(&model, &a, &a), Err(Error::SampleRateMismatch(..))));
        let (b, c) = (noise(4000, 1), noise(4160, 2));
        assert!(enhance(&model, &b, &c).is_err());
    }

    #[test]
    fn streaming_matches_offline() {
        let dims = ModelDims::BASELINE;
        let model = GruMaskModel::init(dims, 9);
        let (mic, far) = (noise(160 * 40, 5), noise(160 * 40, 6));
        let offline = enhance(&model, &mic, &far).unwrap();
        let mut stream = StreamingEnhancer::new(&model).unwrap();
        let mut out = Vec::new();
        for (m, f) in mic.samples().chunks(160).zip(far.samples().chunks(160)) {
            stream.process_hop(m, f, &mut out).unwrap();
        }
        // Every hop except the tail still waiting on a following frame.
        assert_eq!(out.len(), offline.len() - 160);
        for (a, b) in out.iter().zip(offline.samples()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
