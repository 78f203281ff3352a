//! Reverberation time from an impulse response.
//!
//! Schroeder backward integration gives the energy decay curve; a straight
//! line is fitted (least squares, dB vs seconds) between the -5 dB and -25 dB
//! points, and the 20 dB decay time of that line is extrapolated to 60 dB.

use super::rir::Rir;
use crate::error::{Error, Result};

const FIT_START_DB: f64 = -5.0;
const FIT_END_DB: f64 = -25.0;
const MIN_LENGTH_S: f64 = 0.1;

/// Normalised energy decay curve in dB (0 dB at the first sample).
pub fn energy_decay_curve(taps: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut edc: Vec<f64> = taps
        .iter()
        .rev()
        .map(|h| {
            acc += h * h;
            acc
        })
        .collect();
    edc.reverse();
    let total = edc.first().copied().unwrap_or(0.0);
    edc.iter().map(|e| 10.0 * (e / total).log10()).collect()
}

/// RT60 in seconds (3 x T20).
pub fn estimate_rt60(rir: &Rir) -> Result<f64> {
    let fs = rir.sample_rate() as f64;
    let needed = (MIN_LENGTH_S * fs).ceil() as usize;
    if rir.len() < needed {
        return Err(Error::TooShort {
            len: rir.len(),
            needed,
        });
    }
    let edc = energy_decay_curve(rir.taps());
    let start = edc.iter().position(|&d| d <= FIT_START_DB);
    let end = edc.iter().position(|&d| d <= FIT_END_DB);
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) => (s, e),
        _ => {
            return Err(Error::InsufficientDecay(format!(
                "energy decay never reaches {FIT_END_DB} dB"
            )))
        }
    };
    // points strictly inside the fit window; a jump straight through it
    // (e.g. a lone impulse) leaves nothing to fit
    let points: Vec<(f64, f64)> = (start..end)
        .filter(|&i| edc[i] >= FIT_END_DB && edc[i] <= FIT_START_DB)
        .map(|i| (i as f64 / fs, edc[i]))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientDecay(format!(
            "only {} samples between {FIT_START_DB} and {FIT_END_DB} dB",
            points.len()
        )));
    }
    let slope = least_squares_slope(&points);
    if !(slope < 0.0) {
        return Err(Error::InsufficientDecay("fitted decay is not negative".into()));
    }
    let t20 = -20.0 / slope;
    Ok(3.0 * t20)
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
