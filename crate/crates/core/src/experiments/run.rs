use std::collections::HashMap;

use rayon::prelude::*;

use super::spec::{BeamformerKind, EstimatorKind, ExperimentKind, ExperimentSpec};
use super::table::{mean_stderr, ResultRow, ResultTable};
use crate::beamforming::{
    ber_trial, build_flat_hybrid_combiner, build_ttd_hybrid_combiner, gain_profile, link_spectral_efficiency,
    optimal_digital_link, GainSample, HybridLink,
};
use crate::channel::{generate_channel, grid_sine, nearest_grid_index, ChannelEnvironment, ChannelRealization};
use crate::config::{Psf, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    bcrlb, extract_dominant_angles, gsomp_estimate, hbg_sr_estimate, matched_filter_beamspace, mmv_ls_estimate,
    nmse_metric, reconstruct_channel, sbl_per_subcarrier, squared_error, AngleSelection, Basis, BeamspaceEstimate, EmOptions,
};
use crate::frontend::{quantization_params, simulate_received_pilots, AdcModel, PilotFrame, PilotObservation};
use crate::linalg::{frob_sq, CMat};
use crate::rng::{substream, substream_raw, Lane};

/// One metric value produced by a trial; `None` marks a failed method.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub method: String,
    pub snr_index: usize,
    pub metric: &'static str,
    pub value: Option<f64>,
}

impl Sample {
    fn new(method: impl Into<String>, snr_index: usize, metric: &'static str, value: Option<f64>) -> Self {
        Sample { method: method.into(), snr_index, metric, value }
    }
}

/// Lane id for a random stream that depends on a variant (method, ADC
/// resolution) and an SNR point.
fn lane(base: Lane, variant: usize, snr_index: usize) -> u64 {
    base as u64 | ((variant as u64 + 1) << 8) | ((snr_index as u64 + 1) << 32)
}

fn flatten(h: &[Vec<CMat>]) -> Vec<CMat> {
    h.iter().flatten().cloned().collect()
}

fn em_options(spec: &ExperimentSpec) -> EmOptions {
    EmOptions { epsilon: spec.em_epsilon, max_iter: spec.em_max_iter }
}

/// Run one estimator on an observation.
pub fn run_estimator(
    kind: EstimatorKind,
    obs: &PilotObservation,
    spec: &ExperimentSpec,
    config: &SystemConfig,
) -> Result<BeamspaceEstimate> {
    match kind {
        EstimatorKind::HbgSr => hbg_sr_estimate(obs, &em_options(spec)),
        EstimatorKind::SblPerSubcarrier => sbl_per_subcarrier(obs, &em_options(spec)),
        EstimatorKind::MmvLs => mmv_ls_estimate(obs),
        EstimatorKind::Gsomp => {
            let planted = config.num_users * (1 + config.num_nlos * config.num_rays);
            let support = spec.gsomp_max_support.unwrap_or(planted).min(obs.y.nrows());
            // Expected noise energy over all columns.
            let tol = obs.y.ncols() as f64 * obs.noise_cov.diagonal().iter().map(|z| z.re).sum::<f64>();
            gsomp_estimate(obs, support, tol)
        }
    }
}

fn observe(
    channel: &ChannelRealization,
    frame: &PilotFrame,
    config: &SystemConfig,
    adc: AdcModel,
    noise_lane: u64,
    spec: &ExperimentSpec,
    trial: u64,
) -> Result<PilotObservation> {
    let qp = quantization_params(config.adc_bits)?;
    let mut rng = substream_raw(spec.seed, trial, noise_lane);
    simulate_received_pilots(channel, frame, config, &qp, adc, &mut rng)
}

/// Estimate and score against the true channel: `(nmse, squared error)`.
fn score(
    kind: EstimatorKind,
    obs: &PilotObservation,
    truth: &[CMat],
    spec: &ExperimentSpec,
    config: &SystemConfig,
) -> Result<(f64, f64)> {
    let est = run_estimator(kind, obs, spec, config)?;
    let h = flatten(&reconstruct_channel(&est, &obs.dictionaries, config.n_u)?);
    Ok((nmse_metric(&h, truth)?, squared_error(&h, truth)))
}

/// Bound on the squared error and its normalized form, with the prior
/// variances taken from the true beamspace coefficients.
fn bound(channel: &ChannelRealization, obs: &PilotObservation, truth: &[CMat]) -> Result<(f64, f64)> {
    let x = channel.beamspace_truth()?;
    let kk = x.ncols() as f64;
    let gamma: Vec<f64> = x.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() / kk).collect();
    let b = bcrlb(obs, &gamma)?;
    let energy: f64 = truth.iter().map(frob_sq).sum();
    Ok((b / energy, b))
}

fn design_link(
    bf: BeamformerKind,
    angles: &AngleSelection,
    csi: &[Vec<CMat>],
    config: &SystemConfig,
) -> Result<HybridLink> {
    match bf {
        BeamformerKind::Ttd => Ok(build_ttd_hybrid_combiner(angles, csi, config)?.link()),
        BeamformerKind::Flat => Ok(build_flat_hybrid_combiner(angles, csi, config)?.link()),
        BeamformerKind::OptimalDigital => optimal_digital_link(csi, config),
    }
}

fn trial_nmse(spec: &ExperimentSpec, channel: &ChannelRealization, frame: &PilotFrame, t: u64) -> Result<Vec<Sample>> {
    let truth = flatten(&channel.h);
    let adc = spec.adc_model.into();
    let mut out = Vec::new();
    for (i, &snr) in spec.snr_grid.iter().enumerate() {
        let cfg = spec.config.clone().with_snr_db(snr);
        let obs = observe(channel, frame, &cfg, adc, lane(Lane::Noise, 0, i), spec, t)?;
        for &e in &spec.estimators {
            let r = score(e, &obs, &truth, spec, &cfg).ok();
            out.push(Sample::new(e.name(), i, "nmse", r.map(|v| v.0)));
            out.push(Sample::new(e.name(), i, "mse", r.map(|v| v.1)));
        }
        if spec.bound {
            let r = bound(channel, &obs, &truth).ok();
            out.push(Sample::new("bcrlb", i, "nmse", r.map(|v| v.0)));
            out.push(Sample::new("bcrlb", i, "mse", r.map(|v| v.1)));
        }
    }
    Ok(out)
}

fn trial_link(spec: &ExperimentSpec, channel: &ChannelRealization, frame: &PilotFrame, t: u64) -> Result<Vec<Sample>> {
    let ber = spec.kind == ExperimentKind::BerVsSnr;
    let metric = if ber { "ber" } else { "se" };
    let adc: AdcModel = spec.adc_model.into();
    let mut out = Vec::new();
    for (i, &snr) in spec.snr_grid.iter().enumerate() {
        let cfg = spec.config.clone().with_snr_db(snr);
        let obs = observe(channel, frame, &cfg, adc, lane(Lane::Noise, 0, i), spec, t)?;
        let genie_angles = matched_filter_beamspace(&channel.h, &obs.dictionaries)
            .and_then(|mf| extract_dominant_angles(&mf, &cfg));
        let mut sources: Vec<(String, Result<(AngleSelection, Vec<Vec<CMat>>)>)> = Vec::new();
        for &e in &spec.estimators {
            let csi = run_estimator(e, &obs, spec, &cfg).and_then(|est| {
                let h = reconstruct_channel(&est, &obs.dictionaries, cfg.n_u)?;
                let angles = match est.basis {
                    Basis::Beamspace => extract_dominant_angles(&est, &cfg)?,
                    Basis::Antenna => extract_dominant_angles(&matched_filter_beamspace(&h, &obs.dictionaries)?, &cfg)?,
                };
                Ok((angles, h))
            });
            sources.push((e.name().to_string(), csi));
        }
        sources.push(("genie".into(), genie_angles.map(|a| (a, channel.h.clone()))));
        for (b, &bf) in spec.beamformers.iter().enumerate() {
            for (name, src) in &sources {
                let value = src.as_ref().ok().and_then(|(angles, csi)| {
                    let link = design_link(bf, angles, csi, &cfg).ok()?;
                    if ber {
                        // Same data and noise for every CSI source.
                        let mut rng = substream_raw(spec.seed, t, lane(Lane::Data, b, i));
                        ber_trial(&channel.h, csi, &link, &cfg, adc, spec.n_data, &mut rng).ok().map(|e| e.rate())
                    } else {
                        link_spectral_efficiency(&link, &channel.h, &cfg).ok()
                    }
                });
                out.push(Sample::new(format!("{}+{}", bf.name(), name), i, metric, value));
            }
        }
    }
    Ok(out)
}

fn trial_adc(spec: &ExperimentSpec, channel: &ChannelRealization, frame: &PilotFrame, t: u64) -> Result<Vec<Sample>> {
    let truth = flatten(&channel.h);
    let adc = spec.adc_model.into();
    let mut out = Vec::new();
    for &bits in &spec.adc_bits {
        for (i, &snr) in spec.snr_grid.iter().enumerate() {
            let mut cfg = spec.config.clone().with_snr_db(snr);
            cfg.adc_bits = bits;
            // Thermal noise is shared across resolutions.
            let obs = observe(channel, frame, &cfg, adc, lane(Lane::Noise, 0, i), spec, t)?;
            for &e in &spec.estimators {
                let v = score(e, &obs, &truth, spec, &cfg).ok().map(|r| r.0);
                out.push(Sample::new(format!("{}/b={}", e.name(), bits), i, "nmse", v));
            }
        }
    }
    Ok(out)
}

fn trial_psf(spec: &ExperimentSpec, env: &ChannelEnvironment, t: u64) -> Result<Vec<Sample>> {
    let rrc = match spec.config.psf {
        p @ Psf::Rrc { .. } => p,
        Psf::Rect => Psf::TABLE_RRC,
    };
    let frame = PilotFrame::random(&spec.config, &mut substream(spec.seed, t, Lane::Frame));
    let adc = spec.adc_model.into();
    let mut out = Vec::new();
    for (name, psf) in [("rrc", rrc), ("rect", Psf::Rect)] {
        let mut base = spec.config.clone();
        base.psf = psf;
        let channel = generate_channel(&base, env, &mut substream(spec.seed, t, Lane::Channel))?;
        let truth = flatten(&channel.h);
        for (i, &snr) in spec.snr_grid.iter().enumerate() {
            let cfg = base.clone().with_snr_db(snr);
            let obs = observe(&channel, &frame, &cfg, adc, lane(Lane::Noise, 0, i), spec, t)?;
            for &e in &spec.estimators {
                let v = score(e, &obs, &truth, spec, &cfg).ok().map(|r| r.0);
                out.push(Sample::new(format!("{}/{}", e.name(), name), i, "nmse", v));
            }
        }
    }
    Ok(out)
}

/// Every sample of trial `t`; reproducible in isolation.
pub fn run_trial(spec: &ExperimentSpec, env: &ChannelEnvironment, t: u64) -> Result<Vec<Sample>> {
    if spec.kind == ExperimentKind::PsfCompare {
        return trial_psf(spec, env, t);
    }
    let channel = generate_channel(&spec.config, env, &mut substream(spec.seed, t, Lane::Channel))?;
    let frame = PilotFrame::random(&spec.config, &mut substream(spec.seed, t, Lane::Frame));
    match spec.kind {
        ExperimentKind::NmseVsSnr => trial_nmse(spec, &channel, &frame, t),
        ExperimentKind::BerVsSnr | ExperimentKind::SeVsSnr => trial_link(spec, &channel, &frame, t),
        ExperimentKind::AdcSweep => trial_adc(spec, &channel, &frame, t),
        ExperimentKind::GainProfile | ExperimentKind::PsfCompare => unreachable!(),
    }
}

/// Steering sine of the gain-profile beams: the configured design sine
/// snapped to the receive grid.
pub fn gain_design(spec: &ExperimentSpec) -> f64 {
    let g = spec.config.grid_bs;
    grid_sine(nearest_grid_index(spec.gain_design_sine, g), g)
}

/// Gain profiles of the delay-compensated (`ttd`) and single-element
/// (`flat`) columns over `gain_points` sines in [-1, 1].
pub fn gain_profiles(spec: &ExperimentSpec) -> Result<Vec<(&'static str, Vec<GainSample>)>> {
    let design = gain_design(spec);
    let n = spec.gain_points;
    let arrivals: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    Ok(vec![
        ("ttd", gain_profile(design, &spec.config, true, &arrivals)?),
        ("flat", gain_profile(design, &spec.config, false, &arrivals)?),
    ])
}

fn gain_table(spec: &ExperimentSpec) -> Result<ResultTable> {
    let design = gain_design(spec);
    let snr = spec.config.snr_db();
    let mut rows = Vec::new();
    for (name, compensated) in [("ttd", true), ("flat", false)] {
        let g: Vec<f64> = gain_profile(design, &spec.config, compensated, &[design])?.iter().map(|s| s.gain).collect();
        let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let (mean, _) = mean_stderr(&g);
        for (metric, value) in [("min_gain", min), ("mean_gain", mean)] {
            rows.push(ResultRow {
                experiment: spec.kind.name().into(),
                method: name.into(),
                snr_db: snr,
                metric: metric.into(),
                value,
                trials: 1,
                stderr: 0.0,
                failures: 0,
            });
        }
    }
    Ok(ResultTable { rows })
}

/// Run the sweep over trials `0..spec.trials` and aggregate.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    let trials: Vec<u64> = (0..spec.trials as u64).collect();
    run_trials(spec, &trials)
}

/// Run the listed trials concurrently and reduce them in a fixed key order.
/// Aggregates do not depend on the order of `trials`.
pub fn run_trials(spec: &ExperimentSpec, trials: &[u64]) -> Result<ResultTable> {
    spec.validate()?;
    if spec.kind == ExperimentKind::GainProfile {
        return gain_table(spec);
    }
    if trials.is_empty() {
        return Err(Error::Domain("no trials to run".into()));
    }
    let env = ChannelEnvironment::from_config(&spec.config)?;
    let mut order = trials.to_vec();
    order.sort_unstable();
    let outcomes: Vec<Result<Vec<Sample>>> = order.par_iter().map(|&t| run_trial(spec, &env, t)).collect();
    aggregate(spec, outcomes)
}

fn aggregate(spec: &ExperimentSpec, outcomes: Vec<Result<Vec<Sample>>>) -> Result<ResultTable> {
    let mut keys: Vec<(String, usize, &'static str)> = Vec::new();
    let mut index: HashMap<(String, usize, &'static str), usize> = HashMap::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut failures: Vec<usize> = Vec::new();
    let mut lost = 0;
    let mut first_err = None;
    for outcome in outcomes {
        let samples = match outcome {
            Ok(s) => s,
            Err(e) => {
                lost += 1;
                first_err.get_or_insert(e);
                continue;
            }
        };
        for s in samples {
            let key = (s.method, s.snr_index, s.metric);
            let i = *index.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                values.push(Vec::new());
                failures.push(0);
                keys.len() - 1
            });
            match s.value {
                Some(v) if v.is_finite() => values[i].push(v),
                _ => failures[i] += 1,
            }
        }
    }
    if keys.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::Domain("experiment produced no samples".into())));
    }
    let mut method_rank: HashMap<&str, usize> = HashMap::new();
    for (m, _, _) in &keys {
        let n = method_rank.len();
        method_rank.entry(m.as_str()).or_insert(n);
    }
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by_key(|&i| (method_rank[keys[i].0.as_str()], keys[i].1));
    let rows = idx
        .into_iter()
        .map(|i| {
            let (mean, stderr) = mean_stderr(&values[i]);
            ResultRow {
                experiment: spec.kind.name().into(),
                method: keys[i].0.clone(),
                snr_db: spec.snr_grid[keys[i].1],
                metric: keys[i].2.into(),
                value: mean,
                trials: values[i].len(),
                stderr,
                failures: failures[i] + lost,
            }
        })
        .collect();
    Ok(ResultTable { rows })
}
