use ndarray::{s, Array2, ArrayView1, ArrayViewMut1};
use num_complex::Complex64;

use crate::audio::SpectralTensor;
use crate::error::{Error, Result};

/// Added to |X|^2 before the log so silent bins stay finite.
pub const POWER_FLOOR: f64 = 1e-12;

/// Frames x (2 * bins) log-power features: microphone bins first, far end after.
pub fn features(mic: &SpectralTensor, far: &SpectralTensor) -> Result<Array2<f64>> {
    if mic.frames() != far.frames() {
        return Err(Error::LengthMismatch(mic.frames(), far.frames()));
    }
    if mic.bins() != far.bins() {
        return Err(Error::Config(format!(
            "microphone has {} bins, far end {}",
            mic.bins(),
            far.bins()
        )));
    }
    let bins = mic.bins();
    let mut out = Array2::zeros((mic.frames(), 2 * bins));
    for ((mut row, m), f) in out
        .rows_mut()
        .into_iter()
        .zip(mic.values().rows())
        .zip(far.values().rows())
    {
        frame_features(m, f, &mut row);
    }
    Ok(out)
}

pub(crate) fn frame_features(
    mic: ArrayView1<Complex64>,
    far: ArrayView1<Complex64>,
    out: &mut ArrayViewMut1<f64>,
) {
    let bins = mic.len();
    for (o, x) in out.slice_mut(s![..bins]).iter_mut().zip(mic) {
        *o = (x.norm_sqr() + POWER_FLOOR).ln();
    }
    for (o, x) in out.slice_mut(s![bins..]).iter_mut().zip(far) {
        *o = (x.norm_sqr() + POWER_FLOOR).ln();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::StftConfig;

    fn spectrum(values: Array2<Complex64>) -> SpectralTensor {
        SpectralTensor::new(values, StftConfig::baseline(), 16000).unwrap()
    }

    #[test]
    fn silent_floor() {
        let z = spectrum(Array2::zeros((3, 161)));
        let f = features(&z, &z).unwrap();
        assert_eq!(f.dim(), (3, 322));
        assert!(f.iter().all(|&v| (v - (-27.631021115928547)).abs() < 1e-12));
    }

    #[test]
    fn unit_magnitude_is_near_zero() {
        let one = spectrum(Array2::from_elem((2, 161), Complex64::new(0.6, 0.8)));
        let f = features(&one, &one).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn hand_evaluation() {
        use rand::Rng;
        let mut rng = crate::sim::rng::scenario_rng(3, 0);
        let mut draw = || {
            Array2::from_shape_fn((1, 161), |_| {
                Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))
            })
        };
        let (m, r) = (draw(), draw());
        let f = features(&spectrum(m.clone()), &spectrum(r.clone())).unwrap();
        for k in 0..161 {
            let pm = m[[0, k]].re * m[[0, k]].re + m[[0, k]].im * m[[0, k]].im;
            let pr = r[[0, k]].re * r[[0, k]].re + r[[0, k]].im * r[[0, k]].im;
            assert!((f[[0, k]] - (pm + 1e-12).ln()).abs() < 1e-12);
            assert!((f[[0, 161 + k]] - (pr + 1e-12).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_mismatch() {
        let a = spectrum(Array2::zeros((3, 161)));
        let b = spectrum(Array2::zeros((4, 161)));
        assert!(matches!(features(&a, &b), Err(Error::LengthMismatch(3, 4))));
    }
}
