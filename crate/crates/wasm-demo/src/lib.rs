//! Browser bindings for three small views of the simulator: the band-wide
//! array gain of a steered beam with and without true-time delays, the delay
//! schedule that produces it, and a single seeded channel-estimation trial.

use thz_core::beamforming::{gain_profile, quantize_delays, ttd_delays};
use thz_core::experiments::{run_trials, EstimatorKind, ExperimentKind, ExperimentSpec};
use thz_core::{Profile, SystemConfig};
use wasm_bindgen::prelude::*;

fn profile_config(profile: &str) -> Result<SystemConfig, String> {
    let p: Profile = profile.parse().map_err(|e: thz_core::Error| e.to_string())?;
    Ok(p.config())
}

fn text(e: thz_core::Error) -> String {
    e.to_string()
}

/// Gain versus arrival sine, averaged over subcarriers, for a beam steered
/// to `design_sine`. Returns `points` rows of `[sine, ttd_gain, flat_gain]`
/// flattened row-major.
pub fn band_gain_curves(profile: &str, design_sine: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least 2 points".to_string());
    }
    if !(-1.0..=1.0).contains(&design_sine) {
        return Err("design sine must lie in [-1, 1]".to_string());
    }
    let config = profile_config(profile)?;
    let sines: Vec<f64> = (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect();
    let band_mean = |compensated: bool| -> Result<Vec<f64>, String> {
        let samples = gain_profile(design_sine, &config, compensated, &sines).map_err(text)?;
        let mut sum = vec![0.0; points];
        for s in &samples {
            let i = sines.iter().position(|&x| x == s.angle_sine).expect("sample sine comes from the input");
            sum[i] += s.gain;
        }
        Ok(sum.into_iter().map(|g| g / config.num_subcarriers as f64).collect())
    };
    let ttd = band_mean(true)?;
    let flat = band_mean(false)?;
    Ok((0..points).flat_map(|i| [sines[i], ttd[i], flat[i]]).collect())
}

/// True-time delays (picoseconds) of one RF chain's delay elements when
/// steering to `sine`.
pub fn chain_delays_ps(profile: &str, sine: f64) -> Result<Vec<f64>, String> {
    if !(-1.0..=1.0).contains(&sine) {
        return Err("sine must lie in [-1, 1]".to_string());
    }
    let config = profile_config(profile)?;
    let subarrays = config.tds_per_chain;
    let mut d = ttd_delays(sine, config.n_bs / subarrays, subarrays, config.carrier_period());
    if let Some(r) = config.delay_resolution {
        d = quantize_delays(&d, r);
    }
    Ok(d.into_iter().map(|t| t * 1e12).collect())
}

/// One seeded estimation trial on the small profile. Returns the results
/// table as CSV text with one `nmse` and one `mse` row per estimator.
pub fn estimation_trial_csv(snr_db: f64, seed: u32, with_bound: bool) -> Result<String, String> {
    let spec = ExperimentSpec {
        kind: ExperimentKind::NmseVsSnr,
        snr_grid: vec![snr_db],
        trials: 1,
        estimators: vec![EstimatorKind::HbgSr, EstimatorKind::SblPerSubcarrier, EstimatorKind::MmvLs, EstimatorKind::Gsomp],
        seed: u64::from(seed),
        bound: with_bound,
        config: Profile::Desk.config(),
        ..ExperimentSpec::default()
    };
    let table = run_trials(&spec, &[0]).map_err(text)?;
    table.to_csv_string().map_err(text)
}

#[wasm_bindgen(js_name = gainCurves)]
pub fn gain_curves(profile: &str, design_sine: f64, points: usize) -> Result<Vec<f64>, JsError> {
    band_gain_curves(profile, design_sine, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = delaySchedule)]
pub fn delay_schedule(profile: &str, sine: f64) -> Result<Vec<f64>, JsError> {
    chain_delays_ps(profile, sine).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = estimateTrial)]
pub fn estimate_trial(snr_db: f64, seed: u32, with_bound: bool) -> Result<String, JsError> {
    estimation_trial_csv(snr_db, seed, with_bound).map_err(|e| JsError::new(&e))
}
