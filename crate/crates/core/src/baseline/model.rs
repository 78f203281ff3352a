use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::Uniform;
use serde::{Deserialize, Serialize};

use super::gru::{sigmoid, standard, GruLayer, GruTrace};
use crate::error::{Error, Result};
use crate::sim::rng::scenario_rng;

/// Shape of a mask model. `layers = 0` gives a head applied directly to the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub bins: usize,
    pub layers: usize,
}

impl ModelDims {
    /// Two 322-unit layers over 2 x 161 log-power bins.
    pub const BASELINE: ModelDims = ModelDims {
        input: 322,
        hidden: 322,
        bins: 161,
        layers: 2,
    };

    pub fn head_input(&self) -> usize {
        if self.layers == 0 {
            self.input
        } else {
            self.hidden
        }
    }

    /// Closed-form parameter count (single bias per gate).
    pub fn param_count(&self) -> usize {
        let h = self.hidden;
        let recurrent: usize = (0..self.layers)
            .map(|l| {
                let input = if l == 0 { self.input } else { h };
                3 * (h * input + h * h + h)
            })
            .sum();
        let head = if self.bins == 0 { 0 } else { self.bins * self.head_input() + self.bins };
        recurrent + head
    }
}

/// Stacked recurrent layers followed by a sigmoid mask head.
#[derive(Debug, Clone, PartialEq)]
pub struct GruMaskModel {
    dims: ModelDims,
    layers: Vec<GruLayer>,
    head_weight: Array2<f64>,
    head_bias: Array1<f64>,
}

// Keeps the mask strictly inside (0, 1) even where the sigmoid rounds to an endpoint.
const MASK_MAX: f64 = 1.0 - f64::EPSILON / 2.0;
const MASK_MIN: f64 = f64::MIN_POSITIVE;

pub(crate) struct ForwardTrace {
    layers: Vec<GruTrace>,
    pub mask: Array2<f64>,
}

impl GruMaskModel {
    pub fn zeros(dims: ModelDims) -> Self {
        let layers = (0..dims.layers)
            .map(|l| GruLayer::zeros(if l == 0 { dims.input } else { dims.hidden }, dims.hidden))
            .collect();
        Self {
            dims,
            layers,
            head_weight: Array2::zeros((dims.bins, dims.head_input())),
            head_bias: Array1::zeros(dims.bins),
        }
    }

    /// Seeded uniform initialisation, `k = 1/sqrt(fan_in)` per tensor.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = scenario_rng(seed, 0);
        let layers = (0..dims.layers)
            .map(|l| GruLayer::init(if l == 0 { dims.input } else { dims.hidden }, dims.hidden, &mut rng))
            .collect();
        let k = 1.0 / (dims.head_input().max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-k, k).expect("finite bound");
        let head_weight = Array2::from_shape_simple_fn((dims.bins, dims.head_input()), || rng.sample(dist));
        let head_bias = Array1::from_shape_simple_fn(dims.bins, || rng.sample(dist));
        Self {
            dims,
            layers,
            head_weight,
            head_bias,
        }
    }

    pub fn baseline(seed: u64) -> Self {
        Self::init(ModelDims::BASELINE, seed)
    }

    pub fn from_parts(layers: Vec<GruLayer>, head_weight: Array2<f64>, head_bias: Array1<f64>) -> Result<Self> {
        let input = match layers.first() {
            Some(l) => l.input_size(),
            None => head_weight.ncols(),
        };
        let hidden = layers.first().map_or(0, GruLayer::hidden_size);
        let dims = ModelDims {
            input,
            hidden,
            bins: head_weight.nrows(),
            layers: layers.len(),
        };
        for (l, layer) in layers.iter().enumerate() {
            let expect_in = if l == 0 { input } else { hidden };
            if layer.hidden_size() != hidden || layer.input_size() != expect_in {
                return Err(Error::Config(format!("layer {l} does not chain with the previous one")));
            }
        }
        if head_weight.ncols() != dims.head_input() || head_bias.len() != dims.bins {
            return Err(Error::Config("head shape does not match the last layer".into()));
        }
        let model = Self {
            dims,
            layers,
            head_weight: standard(head_weight),
            head_bias,
        };
        if model.slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(model)
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn layers(&self) -> &[GruLayer] {
        &self.layers
    }

    pub fn head_weight(&self) -> &Array2<f64> {
        &self.head_weight
    }

    pub fn head_bias(&self) -> &Array1<f64> {
        &self.head_bias
    }

    /// Exact count over all tensors.
    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Every tensor as a flat row-major slice, layers first then the head.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.slices()).collect();
        out.push(self.head_weight.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.layers.iter_mut().flat_map(|l| l.slices_mut()).collect();
        out.push(self.head_weight.as_slice_mut().expect("standard layout"));
        out.push(self.head_bias.as_slice_mut().expect("standard layout"));
        out
    }

    /// Suppression mask (frames x bins), strictly inside (0, 1).
    pub fn forward(&self, feats: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_trace(feats)?.mask)
    }

    pub(crate) fn forward_trace(&self, feats: ArrayView2<f64>) -> Result<ForwardTrace> {
        if feats.ncols() != self.dims.input {
            return Err(Error::Config(format!(
                "model expects {} features per frame, got {}",
                self.dims.input,
                feats.ncols()
            )));
        }
        if feats.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let mut traces: Vec<GruTrace> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = traces.last().map_or(feats, |t| t.outputs.view());
            let trace = layer.forward_trace(input, None)?;
            traces.push(trace);
        }
        let top = traces.last().map_or(feats, |t| t.outputs.view());
        let mut mask = standard(top.dot(&self.head_weight.t()) + &self.head_bias);
        mask.mapv_inplace(mask_value);
        Ok(ForwardTrace { layers: traces, mask })
    }

    /// Gradients of `mse_loss(mask * mic_mag, clean_mag)` with respect to every
    /// parameter, returned in a model-shaped container, plus the loss itself.
    pub fn backward(
        &self,
        feats: ArrayView2<f64>,
        mic_mag: ArrayView2<f64>,
        clean_mag: ArrayView2<f64>,
    ) -> Result<(f64, GruMaskModel)> {
        let frames = feats.nrows();
        if frames == 0 {
            return Err(Error::InsufficientData("no frames to backpropagate".into()));
        }
        let shape = (frames, self.dims.bins);
        if mic_mag.dim() != shape || clean_mag.dim() != shape {
            return Err(Error::Config(format!(
                "magnitudes must be {shape:?}, got {:?} and {:?}",
                mic_mag.dim(),
                clean_mag.dim()
            )));
        }
        let trace = self.forward_trace(feats)?;
        let enhanced = &trace.mask * &mic_mag;
        let loss = mse_loss(enhanced.view(), clean_mag)?;

        let scale = 2.0 / (frames * self.dims.bins) as f64;
        let mut d_logit = Array2::zeros(shape);
        Zip::from(&mut d_logit)
            .and(&enhanced)
            .and(&clean_mag)
            .and(&mic_mag)
            .and(&trace.mask)
            .for_each(|d, &e, &c, &y, &m| *d = scale * (e - c) * y * m * (1.0 - m));

        let top = trace.layers.last().map_or(feats, |t| t.outputs.view());
        let mut grads = GruMaskModel::zeros(self.dims);
        grads.head_weight = standard(d_logit.t().dot(&top));
        grads.head_bias = d_logit.sum_axis(Axis(0));
        let mut d_out = d_logit.dot(&self.head_weight);
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 {
                feats
            } else {
                trace.layers[l - 1].outputs.view()
            };
            let (g, d_in) = self.layers[l].backward(input, &trace.layers[l], d_out.view());
            grads.layers[l] = g;
            d_out = d_in;
        }
        Ok((loss, grads))
    }
}

#[inline]
pub(crate) fn mask_value(logit: f64) -> f64 {
    sigmoid(logit).clamp(MASK_MIN, MASK_MAX)
}

/// Mean over all frame-bin cells of the squared difference.
pub fn mse_loss(enhanced: ArrayView2<f64>, clean: ArrayView2<f64>) -> Result<f64> {
    if enhanced.dim() != clean.dim() {
        return Err(Error::Config(format!(
            "shape mismatch {:?} vs {:?}",
            enhanced.dim(),
            clean.dim()
        )));
    }
    if enhanced.is_empty() {
        return Err(Error::InsufficientData("empty spectrogram".into()));
    }
    let sum: f64 = Zip::from(&enhanced)
        .and(&clean)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b));
    Ok(sum / enhanced.len() as f64)
}
