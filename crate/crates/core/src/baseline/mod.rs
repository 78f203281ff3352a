//! Baseline mask-based echo canceller: log-power features of microphone and
//! far end, stacked gated recurrent layers, a sigmoid suppression mask on the
//! microphone magnitude, and magnitude-MSE training with Adam.

mod adam;
mod enhance;
mod features;
mod gradcheck;
mod gru;
mod io;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use enhance::{analyse, apply_mask, enhance, StreamingEnhancer, BASELINE_RATE};
pub use features::{features, POWER_FLOOR};
pub use gradcheck::{gradient_check, GradientCheck, RELATIVE_FLOOR};
pub use gru::GruLayer;
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, MAGIC};
pub use model::{mse_loss, GruMaskModel, ModelDims};
pub use train::{train, write_loss_csv, TrainConfig, TrainingExample};
