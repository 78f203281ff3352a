//! Level-controlled mixing.
//!
//! Powers are measured only over the samples where the reference (near-end or
//! speech) signal is nonzero; the interfering signal's power is taken over the
//! same indices. This keeps zero-padding from deflating the reference power.

use crate::audio::SampleBuffer;
use crate::error::{Error, Result};

/// Mean powers of `reference` and `other` over the reference's nonzero samples.
pub fn active_powers(reference: &[f64], other: &[f64]) -> (f64, f64) {
    let mut n = 0usize;
    let (mut pr, mut po) = (0.0, 0.0);
    for (&r, &o) in reference.iter().zip(other) {
        if r != 0.0 {
            n += 1;
            pr += r * r;
            po += o * o;
        }
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    (pr / n as f64, po / n as f64)
}

/// Gain for `other` that puts it `ratio_db` below `reference` on the active region.
pub fn level_scale(reference: &SampleBuffer, other: &SampleBuffer, ratio_db: f64) -> Result<f64> {
    reference.check_compatible(other)?;
    if !ratio_db.is_finite() {
        return Err(Error::Parameter(format!("level ratio {ratio_db} dB")));
    }
    let (pr, po) = active_powers(reference.samples(), other.samples());
    if pr <= 0.0 {
        return Err(Error::DegenerateInput("reference signal has zero power".into()));
    }
    if po <= 0.0 {
        return Err(Error::DegenerateInput(
            "interfering signal has zero power over the active region".into(),
        ));
    }
    Ok((pr / (po * 10f64.powf(ratio_db / 10.0))).sqrt())
}

/// `mic = nearend + scale * echo` with the signal-to-echo ratio set to `ser_db`.
pub fn mix_at_ser(nearend: &SampleBuffer, echo: &SampleBuffer, ser_db: f64) -> Result<(SampleBuffer, f64)> {
    let scale = level_scale(nearend, echo, ser_db)?;
    Ok((add_scaled(nearend, echo, scale), scale))
}

/// `speech + scale * noise` with the signal-to-noise ratio set to `snr_db`.
pub fn mix_at_snr(speech: &SampleBuffer, noise: &SampleBuffer, snr_db: f64) -> Result<SampleBuffer> {
    let scale = level_scale(speech, noise, snr_db)?;
    Ok(add_scaled(speech, noise, scale))
}

/// Measured `10 log10(P_ref / P_other)` over the reference's active region.
pub fn measured_ratio_db(reference: &[f64], other: &[f64]) -> f64 {
    let (pr, po) = active_powers(reference, other);
    10.0 * (pr / po).log10()
}

pub(crate) fn add_scaled(a: &SampleBuffer, b: &SampleBuffer, scale: f64) -> SampleBuffer {
    a.with_samples(
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| x + scale * y)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(x: Vec<f64>) -> SampleBuffer {
        SampleBuffer::new(x, 16000).unwrap()
    }

    #[test]
    fn equal_power_zero_db_is_unity() {
        let n = buf(vec![1.0, -1.0, 1.0, -1.0]);
        let e = buf(vec![-1.0, 1.0, 1.0, 1.0]);
        let (_, s) = mix_at_ser(&n, &e, 0.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_power_arithmetic() {
        // P_near = 1, P_echo = 4 -> scale 0.5, echo power after scaling 1
        let n = buf(vec![1.0; 8]);
        let e = buf(vec![2.0; 8]);
        let (mic, s) = mix_at_ser(&n, &e, 0.0).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert!(mic.samples().iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn plus_ten_db() {
        let n = buf(vec![0.3, -0.3, 0.3, -0.3]);
        let e = buf(vec![0.3, 0.3, -0.3, 0.3]);
        let (mic, s) = mix_at_ser(&n, &e, 10.0).unwrap();
        assert!((s - 10f64.powf(-0.5)).abs() < 1e-12);
        let scaled: Vec<f64> = mic.samples().iter().zip(n.samples()).map(|(m, x)| m - x).collect();
        assert!((measured_ratio_db(n.samples(), &scaled) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn padding_does_not_change_ser() {
        let n = buf(vec![0.0, 0.0, 0.5, -0.5, 0.0]);
        let e = buf(vec![9.0, 9.0, 0.5, 0.5, 9.0]);
        let (_, s) = mix_at_ser(&n, &e, 0.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snr_forty_db() {
        let sp = buf(vec![0.5, -0.5, 0.5, -0.5]);
        let no = buf(vec![0.5, 0.5, -0.5, -0.5]);
        let y = mix_at_snr(&sp, &no, 40.0).unwrap();
        let noise: Vec<f64> = y.samples().iter().zip(sp.samples()).map(|(a, b)| a - b).collect();
        let (ps, pn) = active_powers(sp.samples(), &noise);
        assert!((ps / pn - 1e4).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let z = buf(vec![0.0; 4]);
        let x = buf(vec![1.0; 4]);
        assert!(matches!(mix_at_snr(&x, &z, 0.0), Err(Error::DegenerateInput(_))));
        assert!(matches!(mix_at_ser(&z, &x, 0.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn mismatched_lengths() {
        let a = buf(vec![1.0; 4]);
        let b = buf(vec![1.0; 5]);
        assert!(matches!(mix_at_ser(&a, &b, 0.0), Err(Error::LengthMismatch(4, 5))));
    }
}
