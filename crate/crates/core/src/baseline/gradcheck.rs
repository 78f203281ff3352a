use ndarray::ArrayView2;
use serde::Serialize;

use super::model::{mse_loss, GruMaskModel};
use crate::error::Result;

/// Floor on the denominator of the relative error, so parameters whose true
/// gradient is (near) zero are judged on absolute agreement.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Tensor index and element index of the worst parameter.
    pub worst: (usize, usize),
    pub checked: usize,
}

fn loss_of(model: &GruMaskModel, feats: ArrayView2<f64>, mic: ArrayView2<f64>, clean: ArrayView2<f64>) -> Result<f64> {
    let mask = model.forward(feats)?;
    mse_loss((&mask * &mic).view(), clean)
}

/// Compares analytic gradients with central differences of step `delta` for
/// every parameter of `model`.
pub fn gradient_check(
    model: &GruMaskModel,
    feats: ArrayView2<f64>,
    mic_mag: ArrayView2<f64>,
    clean_mag: ArrayView2<f64>,
    delta: f64,
) -> Result<GradientCheck> {
    let (_, grads) = model.backward(feats, mic_mag, clean_mag)?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = model.clone();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    for (t, tensor) in analytic.iter().enumerate() {
        for (i, &a) in tensor.iter().enumerate() {
            let orig = probe.slices()[t][i];
            probe.slices_mut()[t][i] = orig + delta;
            let up = loss_of(&probe, feats, mic_mag, clean_mag)?;
            probe.slices_mut()[t][i] = orig - delta;
            let down = loss_of(&probe, feats, mic_mag, clean_mag)?;
            probe.slices_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * delta);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (t, i);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
