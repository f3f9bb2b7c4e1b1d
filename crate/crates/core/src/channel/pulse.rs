//! Pulse-shaping filter taps and their per-subcarrier DFT coefficients.

use std::f64::consts::PI;

use crate::config::Psf;
use crate::linalg::{cis, C64};

/// RRC support in symbol periods on each side of the peak.
pub const RRC_SPAN: f64 = 4.0;

/// Tolerance for grid alignment in the rectangular pulse, in symbol units.
const RECT_EPS: f64 = 1e-9;

/// Unnormalized root-raised-cosine impulse response at `t` symbol periods.
fn rrc_raw(t: f64, roll_off: f64) -> f64 {
    let b = roll_off;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-12 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// Scale making `(1/sps) sum_n h(n/sps)^2 = 1` over the truncated support.
fn rrc_scale(roll_off: f64, upsampling: u32) -> f64 {
    let sps = upsampling as f64;
    let half = (RRC_SPAN * sps).round() as i64;
    let energy: f64 = (-half..=half).map(|n| rrc_raw(n as f64 / sps, roll_off).powi(2)).sum::<f64>() / sps;
    1.0 / energy.sqrt()
}

/// Filter value at `t` measured in symbol periods.
pub fn pulse_value(t: f64, psf: &Psf) -> f64 {
    match *psf {
        Psf::Rect => {
            if (-RECT_EPS..1.0 - RECT_EPS).contains(&t) {
                1.0
            } else {
                0.0
            }
        }
        Psf::Rrc { roll_off, upsampling } => {
            if t.abs() > RRC_SPAN + 1e-12 {
                0.0
            } else {
                rrc_scale(roll_off, upsampling) * rrc_raw(t, roll_off)
            }
        }
    }
}

/// Nonzero symbol-spaced taps `(d, pul(d T_s - tau))` for `d in 0..K`.
pub fn pulse_taps(tau: f64, num_subcarriers: usize, sample_period: f64, psf: &Psf) -> Vec<(usize, f64)> {
    let shift = tau / sample_period;
    let (lo, hi) = match psf {
        Psf::Rect => (shift - 1.0, shift + 1.0),
        Psf::Rrc { .. } => (shift - RRC_SPAN - 1.0, shift + RRC_SPAN + 1.0),
    };
    let lo = lo.floor().max(0.0) as usize;
    let hi = (hi.ceil().max(0.0) as usize).min(num_subcarriers.saturating_sub(1));
    let scale = match *psf {
        Psf::Rrc { roll_off, upsampling } => rrc_scale(roll_off, upsampling),
        Psf::Rect => 1.0,
    };
    let mut out = Vec::new();
    for d in lo..=hi {
        let t = d as f64 - shift;
        let v = match *psf {
            Psf::Rect => pulse_value(t, psf),
            Psf::Rrc { roll_off, .. } if t.abs() <= RRC_SPAN + 1e-12 => scale * rrc_raw(t, roll_off),
            Psf::Rrc { .. } => 0.0,
        };
        if v != 0.0 {
            out.push((d, v));
        }
    }
    out
}

/// `beta = sum_{d=0}^{K-1} pul(d T_s - tau) exp(-j 2 pi k d / K)` for the raw
/// DFT exponent index `k`.
pub fn pulse_shaping_coeff(tau: f64, k: usize, num_subcarriers: usize, sample_period: f64, psf: &Psf) -> C64 {
    let kk = num_subcarriers as f64;
    pulse_taps(tau, num_subcarriers, sample_period, psf)
        .into_iter()
        .map(|(d, v)| cis(-2.0 * PI * (k * d % num_subcarriers) as f64 / kk) * v)
        .sum()
}

/// Coefficients for DFT indices `0..K`.
pub fn pulse_shaping_coeffs(tau: f64, num_subcarriers: usize, sample_period: f64, psf: &Psf) -> Vec<C64> {
    let taps = pulse_taps(tau, num_subcarriers, sample_period, psf);
    let kk = num_subcarriers as f64;
    (0..num_subcarriers)
        .map(|k| {
            taps.iter()
                .map(|&(d, v)| cis(-2.0 * PI * (k * d % num_subcarriers) as f64 / kk) * v)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TS: f64 = 1.0 / 5e9;

    #[test]
    fn rect_zero_delay_is_unity() {
        for k in 0..8 {
            let b = pulse_shaping_coeff(0.0, k, 8, TS, &Psf::Rect);
            assert_relative_eq!(b.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(b.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rect_one_sample_delay() {
        let b = pulse_shaping_coeff(TS, 1, 4, TS, &Psf::Rect);
        assert!((b - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn rrc_parseval() {
        let k = 128;
        for tau in [0.0, 0.37 * TS, 2.5 * TS, 5.0 * TS] {
            let taps = pulse_taps(tau, k, TS, &Psf::TABLE_RRC);
            let direct: f64 = (0..k).map(|d| pulse_value(d as f64 - tau / TS, &Psf::TABLE_RRC).powi(2)).sum();
            let tap_energy: f64 = taps.iter().map(|t| t.1 * t.1).sum();
            assert_relative_eq!(tap_energy, direct, max_relative = 1e-12);
            let freq: f64 = pulse_shaping_coeffs(tau, k, TS, &Psf::TABLE_RRC).iter().map(|b| b.norm_sqr()).sum();
            assert_relative_eq!(freq, k as f64 * direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn rrc_upsampled_energy_is_unit() {
        let sps = 20.0;
        let e: f64 = (-80..=80).map(|n| pulse_value(n as f64 / sps, &Psf::TABLE_RRC).powi(2)).sum::<f64>() / sps;
        assert_relative_eq!(e, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn rrc_singular_points_are_continuous() {
        let b = 0.8;
        let t0 = 1.0 / (4.0 * b);
        let at = rrc_raw(t0, b);
        let near = rrc_raw(t0 + 1e-7, b);
        assert!((at - near).abs() < 1e-5);
        assert!((rrc_raw(0.0, b) - rrc_raw(1e-7, b)).abs() < 1e-5);
    }

    #[test]
    fn single_coefficient_matches_batch() {
        let all = pulse_shaping_coeffs(1.3 * TS, 16, TS, &Psf::TABLE_RRC);
        for (k, b) in all.iter().enumerate() {
            let one = pulse_shaping_coeff(1.3 * TS, k, 16, TS, &Psf::TABLE_RRC);
            assert!((one - b).norm() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn rect_grid_delay_has_unit_tap_energy(d in 0usize..6) {
            let taps = pulse_taps(d as f64 * TS, 16, TS, &Psf::Rect);
            let e: f64 = taps.iter().map(|t| t.1 * t.1).sum();
            prop_assert!((e - 1.0).abs() < 1e-15);
            prop_assert_eq!(taps[0].0, d);
        }
    }
}
