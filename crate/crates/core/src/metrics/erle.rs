use serde::{Deserialize, Serialize};

use crate::audio::{mean_square, SampleBuffer};
use crate::error::{Error, Result};

/// Reported in place of +inf when the residual is exactly zero.
pub const ERLE_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Erle {
    pub db: f64,
    /// The residual was silent and `db` holds [`ERLE_CAP_DB`].
    pub capped: bool,
}

/// Echo return loss enhancement, `10 log10(E[y^2] / E[e^2])` in dB.
///
/// Only meaningful on far-end single talk recorded without background noise,
/// where the processed microphone signal is the residual echo.
pub fn erle(mic: &SampleBuffer, residual: &SampleBuffer) -> Result<Erle> {
    mic.check_compatible(residual)?;
    erle_samples(mic.samples(), residual.samples())
}

pub(crate) fn erle_samples(mic: &[f64], residual: &[f64]) -> Result<Erle> {
    if mic.len() != residual.len() {
        return Err(Error::LengthMismatch(mic.len(), residual.len()));
    }
    let py = mean_square(mic);
    if py <= 0.0 {
        return Err(Error::DegenerateInput("microphone signal has zero power".into()));
    }
    let pe = mean_square(residual);
    if pe <= 0.0 {
        return Ok(Erle {
            db: ERLE_CAP_DB,
            capped: true,
        });
    }
    let db = 10.0 * (py / pe).log10();
    Ok(if db > ERLE_CAP_DB {
        Erle {
            db: ERLE_CAP_DB,
            capped: true,
        }
    } else {
        Erle { db, capped: false }
    })
}
