use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

/// Frequency of subcarrier `k` (1-based): `f_c + (k - (K+1)/2) B / K`.
pub fn subcarrier_frequency(k: usize, config: &SystemConfig) -> Result<f64> {
    subcarrier_frequency_raw(k, config.num_subcarriers, config.carrier_freq, config.bandwidth)
}

pub fn subcarrier_frequency_raw(k: usize, num_subcarriers: usize, fc: f64, bandwidth: f64) -> Result<f64> {
    if k == 0 || k > num_subcarriers {
        return Err(Error::IndexOutOfRange { index: k, min: 1, max: num_subcarriers });
    }
    let kk = num_subcarriers as f64;
    Ok(fc + (k as f64 - (kk + 1.0) / 2.0) * bandwidth / kk)
}

/// All subcarrier frequencies, index 0 holding subcarrier 1.
pub fn subcarrier_frequencies(config: &SystemConfig) -> Vec<f64> {
    (1..=config.num_subcarriers)
        .map(|k| subcarrier_frequency(k, config).expect("k within range"))
        .collect()
}

/// Half-wavelength ULA response at `f_k` for direction sine `psi`, with the
/// beam-squint factor `f_k / f_c` in the phase progression.
pub fn array_response(psi: f64, f_k: f64, f_c: f64, n: usize) -> CVec {
    let rel = f_k / f_c;
    let amp = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |m, _| C64::from_polar(amp, -PI * rel * m as f64 * psi))
}

/// Dictionary grid sine for zero-based bin `r`: `2 r / G - 1`.
pub fn grid_sine(r: usize, grid: usize) -> f64 {
    2.0 * r as f64 / grid as f64 - 1.0
}

/// Zero-based bin whose grid sine is nearest to `psi` (no wrap-around).
pub fn nearest_grid_index(psi: f64, grid: usize) -> usize {
    let r = ((psi + 1.0) * grid as f64 / 2.0).round();
    r.clamp(0.0, (grid - 1) as f64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_snapping() {
        assert_eq!(grid_sine(0, 2), -1.0);
        assert_eq!(grid_sine(1, 2), 0.0);
        assert_eq!(nearest_grid_index(1.0, 8), 7);
        assert_eq!(nearest_grid_index(-1.0, 8), 0);
        assert_eq!(nearest_grid_index(0.26, 8), 5);
        for r in 0..32 {
            assert_eq!(nearest_grid_index(grid_sine(r, 32), 32), r);
        }
    }

    #[test]
    fn single_subcarrier_sits_at_carrier() {
        let f = subcarrier_frequency_raw(1, 1, 0.65e12, 5e9).unwrap();
        assert_eq!(f, 0.65e12);
    }

    #[test]
    fn band_edges_for_table_setup() {
        let lo = subcarrier_frequency_raw(1, 128, 0.65e12, 5e9).unwrap();
        let hi = subcarrier_frequency_raw(128, 128, 0.65e12, 5e9).unwrap();
        assert_relative_eq!(lo, 647.519_531_25e9, max_relative = 1e-12);
        assert_relative_eq!(hi, 652.480_468_75e9, max_relative = 1e-12);
        assert!((lo / 1e9 - 647.5195).abs() < 1e-4);
        assert!((hi / 1e9 - 652.4805).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_subcarrier() {
        assert!(matches!(
            subcarrier_frequency_raw(0, 4, 1.0, 0.1),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(subcarrier_frequency_raw(5, 4, 1.0, 0.1).is_err());
    }

    #[test]
    fn broadside_is_uniform() {
        let a = array_response(0.0, 1.1, 1.0, 8);
        for z in a.iter() {
            assert_relative_eq!(z.re, 1.0 / 8f64.sqrt(), epsilon = 1e-15);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn endfire_two_elements() {
        let a = array_response(1.0, 1.0, 1.0, 2);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(a[0].re, s, epsilon = 1e-15);
        assert_relative_eq!(a[1].re, -s, epsilon = 1e-15);
        assert!(a[1].im.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn unit_norm(psi in -1.0f64..=1.0, rel in 0.9f64..1.1, n in 1usize..96) {
            let a = array_response(psi, rel, 1.0, n);
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn squint_scaled_sine_restores_full_gain(theta in -0.99f64..0.99, rel in 0.95f64..1.05, n in 2usize..80) {
            let squinted = array_response(theta / rel, rel, 1.0, n);
            let reference = array_response(theta, 1.0, 1.0, n);
            let g = squinted.dotc(&reference).norm();
            prop_assert!((g - 1.0).abs() < 1e-12);
        }
    }
}
