use std::f64::consts::PI;
use std::path::Path;

use crate::channel::{array_response, subcarrier_frequencies};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cis, CVec};

/// `sin(N pi x / 2) / sin(pi x / 2)`, taken by continuity at even `x`.
pub fn dirichlet_kernel(n: usize, x: f64) -> f64 {
    // x = 2m + d with |d| <= 1 splits off the sign (-1)^(m (N - 1)).
    let m = (x / 2.0).round();
    let d = x - 2.0 * m;
    let odd = ((m as i64).rem_euclid(2) == 1) && n % 2 == 0;
    let sign = if odd { -1.0 } else { 1.0 };
    let den = (PI * d / 2.0).sin();
    if den == 0.0 {
        return sign * n as f64;
    }
    sign * (n as f64 * PI * d / 2.0).sin() / den
}

/// Subarray delay compensation: `subarrays` TTD elements each feeding
/// `N / subarrays` phase shifters, with directional rotation `rotation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtdCompensation {
    pub subarrays: usize,
    pub rotation: f64,
}

/// Rotation `(1 - rel) P psi` that re-aligns subcarrier `rel = f_k / f_c`
/// with the design sine.
pub fn ttd_rotation(design: f64, per_subarray: usize, rel: f64) -> f64 {
    (1.0 - rel) * per_subarray as f64 * design
}

fn split(n: usize, ttd: Option<TtdCompensation>) -> (usize, usize, f64) {
    match ttd {
        Some(t) => {
            assert!(t.subarrays >= 1 && n % t.subarrays == 0, "N must split into equal subarrays");
            (t.subarrays, n / t.subarrays, t.rotation)
        }
        None => (1, n, 0.0),
    }
}

/// Combiner steered to `design` at the carrier, with subarray `s` rotated
/// by `exp(j pi s v)`.
pub fn steering_combiner(design: f64, n: usize, ttd: Option<TtdCompensation>) -> CVec {
    let (_, p, v) = split(n, ttd);
    let amp = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |i, _| cis(-PI * i as f64 * design + PI * (i / p) as f64 * v) * amp)
}

/// `|w^H a(arrival, f_k)|` for the combiner of [`steering_combiner`].
pub fn normalized_array_gain(
    design: f64,
    arrival: f64,
    f_k: f64,
    f_c: f64,
    n: usize,
    ttd: Option<TtdCompensation>,
) -> f64 {
    let w = steering_combiner(design, n, ttd);
    let a = array_response(arrival, f_k, f_c, n);
    w.dotc(&a).norm().min(1.0)
}

/// Closed form `|Xi_S(P psi_d - rel P psi - v) Xi_P(psi_d - rel psi)| / N`
/// of [`normalized_array_gain`].
pub fn factorized_array_gain(
    design: f64,
    arrival: f64,
    f_k: f64,
    f_c: f64,
    n: usize,
    ttd: Option<TtdCompensation>,
) -> f64 {
    let (s, p, v) = split(n, ttd);
    let rel = f_k / f_c;
    let pf = p as f64;
    let outer = dirichlet_kernel(s, pf * design - rel * pf * arrival - v);
    let inner = dirichlet_kernel(p, design - rel * arrival);
    (outer * inner).abs() / n as f64
}

/// Delay schedule of one RF chain steered to `psi`: `s P psi T_c / 2`,
/// shifted by the largest magnitude when `psi < 0` so every entry is
/// nonnegative.
pub fn ttd_delays(psi: f64, per_subarray: usize, subarrays: usize, carrier_period: f64) -> Vec<f64> {
    let step = per_subarray as f64 * psi / 2.0 * carrier_period;
    let offset = if psi < 0.0 { (subarrays.saturating_sub(1)) as f64 * step.abs() } else { 0.0 };
    (0..subarrays).map(|s| offset + s as f64 * step).collect()
}

/// Round delays to a multiple of `resolution`.
pub fn quantize_delays(delays: &[f64], resolution: f64) -> Vec<f64> {
    delays.iter().map(|t| (t / resolution).round() * resolution).collect()
}

/// Smallest TTD count per chain that keeps the rotation within [-1, 1] at
/// relative frequency `rel`: `max(ceil(N (1 - rel)), 1)`.
pub fn min_td_elements(n: usize, rel: f64) -> usize {
    let need = (n as f64 * (1.0 - rel)).ceil();
    if need.is_finite() && need > 1.0 {
        need as usize
    } else {
        1
    }
}

/// One point of an array-gain profile. `subcarrier` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub angle_sine: f64,
    pub subcarrier: usize,
    pub gain: f64,
}

/// Gain of the analog column steered to `design` toward every sine in
/// `arrivals`, on every subcarrier. `compensated` selects the delay
/// network of the configuration; otherwise a single element (no delays).
pub fn gain_profile(design: f64, config: &SystemConfig, compensated: bool, arrivals: &[f64]) -> Result<Vec<GainSample>> {
    let s = if compensated { config.tds_per_chain } else { 1 };
    if s == 0 || config.n_bs % s != 0 {
        return Err(Error::config(format!("N_BS divisible by S ({} % {})", config.n_bs, s)));
    }
    let freqs = subcarrier_frequencies(config);
    let mut out = Vec::with_capacity(arrivals.len() * freqs.len());
    for &psi in arrivals {
        for (k, &f_k) in freqs.iter().enumerate() {
            let w = super::combiner::analog_column(design, config, s, f_k);
            let a = array_response(psi, f_k, config.carrier_freq, config.n_bs);
            out.push(GainSample { angle_sine: psi, subcarrier: k + 1, gain: w.dotc(&a).norm().min(1.0) });
        }
    }
    Ok(out)
}

/// Write `angle_sine,subcarrier_index,gain` rows.
pub fn write_gain_profile_csv(samples: &[GainSample], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["angle_sine", "subcarrier_index", "gain"]).map_err(csv_err)?;
    for s in samples {
        w.write_record([format!("{:.8e}", s.angle_sine), s.subcarrier.to_string(), format!("{:.8e}", s.gain)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_values() {
        assert_eq!(dirichlet_kernel(7, 0.0), 7.0);
        assert_relative_eq!(dirichlet_kernel(3, 1.0), -1.0, epsilon = 1e-15);
        assert!(dirichlet_kernel(4, 1.0).abs() < 1e-15);
        // Limits at even points from either side.
        for n in 1..6 {
            for m in -3i32..=3 {
                let x = 2.0 * m as f64;
                let lim = dirichlet_kernel(n, x);
                assert_relative_eq!(dirichlet_kernel(n, x + 1e-7), lim, max_relative = 1e-6);
                assert_relative_eq!(dirichlet_kernel(n, x - 1e-7), lim, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn uncompensated_squint_loss() {
        let g = normalized_array_gain(1.0, 1.0, 1.1, 1.0, 64, None);
        assert_relative_eq!(g, dirichlet_kernel(64, 0.1).abs() / 64.0, epsilon = 1e-12);
        assert!((g - 0.0587).abs() < 5e-5, "{g}");
    }

    #[test]
    fn delays_table_array() {
        let tc = 1.0 / 0.65e12;
        let d = ttd_delays(1.0, 32, 2, tc);
        assert_eq!(d[0], 0.0);
        assert_relative_eq!(d[1], 16.0 * tc);
        assert!((d[1] - 24.62e-12).abs() < 0.01e-12);
        let n = ttd_delays(-1.0, 32, 2, tc);
        assert_relative_eq!(n[0], 16.0 * tc);
        assert!(n[1].abs() < 1e-30);
        assert!(ttd_delays(0.0, 32, 2, tc).iter().all(|&t| t == 0.0));
    }

    #[test]
    fn td_element_count() {
        assert_eq!(min_td_elements(64, 1.0), 1);
        assert_eq!(min_td_elements(64, 0.9), 7);
        let c = SystemConfig::paper();
        let worst = subcarrier_frequencies(&c)[0] / c.carrier_freq;
        assert!((worst - 0.99615).abs() < 1e-4);
        assert_eq!(min_td_elements(64, worst), 1);
        assert!(min_td_elements(64, worst) <= c.tds_per_chain);
    }
}
