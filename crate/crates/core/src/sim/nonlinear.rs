//! Memoryless loudspeaker distortion models.

use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearKind {
    Clip,
    Sigmoid,
}

/// A distortion together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// Hard clip at `clip_fraction * max|x|`.
    Clip { clip_fraction: f64 },
    /// `gamma * (2 / (1 + exp(-a * b)) - 1)` with `b = 1.5 x - 0.3 x^2` and
    /// `a = a_pos` for `b > 0`, `a_neg` otherwise.
    Sigmoid { gamma: f64, a_pos: f64, a_neg: f64 },
}

impl Nonlinearity {
    pub fn clip(clip_fraction: f64) -> Self {
        Nonlinearity::Clip { clip_fraction }
    }

    pub fn sigmoid() -> Self {
        Nonlinearity::Sigmoid {
            gamma: 1.0,
            a_pos: 4.0,
            a_neg: 0.5,
        }
    }

    pub fn kind(&self) -> NonlinearKind {
        match self {
            Nonlinearity::Clip { .. } => NonlinearKind::Clip,
            Nonlinearity::Sigmoid { .. } => NonlinearKind::Sigmoid,
        }
    }

    /// Parameters only, as a JSON object (the kind is reported separately).
    pub fn params_json(&self) -> serde_json::Value {
        match *self {
            Nonlinearity::Clip { clip_fraction } => serde_json::json!({ "clip_fraction": clip_fraction }),
            Nonlinearity::Sigmoid { gamma, a_pos, a_neg } => {
                serde_json::json!({ "gamma": gamma, "a_pos": a_pos, "a_neg": a_neg })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Clip { clip_fraction } => {
                if !(clip_fraction > 0.0 && clip_fraction <= 1.0) {
                    return Err(Error::Parameter(format!(
                        "clip_fraction {clip_fraction} outside (0, 1]"
                    )));
                }
            }
            Nonlinearity::Sigmoid { gamma, a_pos, a_neg } => {
                if !(gamma > 0.0 && a_pos > 0.0 && a_neg > 0.0) {
                    return Err(Error::Parameter("sigmoid parameters must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn sigmoid_sample(x: f64, gamma: f64, a_pos: f64, a_neg: f64) -> f64 {
    let b = 1.5 * x - 0.3 * x * x;
    let a = if b > 0.0 { a_pos } else { a_neg };
    gamma * (2.0 / (1.0 + (-a * b).exp()) - 1.0)
}

pub fn apply_nonlinear(signal: &SampleBuffer, nl: &Nonlinearity) -> Result<SampleBuffer> {
    nl.validate()?;
    let x = signal.samples();
    let out = match *nl {
        Nonlinearity::Clip { clip_fraction } => {
            let c = clip_fraction * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            x.iter().map(|&v| v.clamp(-c, c)).collect()
        }
        Nonlinearity::Sigmoid { gamma, a_pos, a_neg } => {
            x.iter().map(|&v| sigmoid_sample(v, gamma, a_pos, a_neg)).collect()
        }
    };
    Ok(signal.with_samples(out))
}
