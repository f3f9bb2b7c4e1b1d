use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rustfft::FftPlanner;

use super::angles::sample_angles_gmm;
use super::array::{array_response, grid_sine, nearest_grid_index, subcarrier_frequencies};
use super::propagation::{path_gain_magnitude, reflection_coefficient, Absorption, Material};
use super::pulse::pulse_shaping_coeffs;
use crate::config::{AngleModel, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    LoS,
    NLoS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub kind: PathKind,
    /// Seconds, within `[0, (D-1) T_s]`.
    pub delay: f64,
    pub aoa_sine: f64,
    pub aod_sine: f64,
    /// Radians; NLoS only.
    pub incidence_angle: Option<f64>,
    /// NLoS only.
    pub material: Option<Material>,
    /// Metres travelled.
    pub distance: f64,
    pub gain_phase: f64,
    /// Set when the reflection hit total internal reflection on any subcarrier.
    pub total_internal: bool,
}

/// Scatterers and absorption used by [`generate_channel`].
#[derive(Debug, Clone)]
pub struct ChannelEnvironment {
    pub materials: Vec<Material>,
    pub absorption: Absorption,
}

impl ChannelEnvironment {
    /// Built-in materials and the configured constant absorption, overridden
    /// by the table files named in the config.
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let materials = match &config.materials_table {
            Some(p) => super::propagation::load_materials(p)?,
            None => Material::table(),
        };
        let absorption = match &config.absorption_table {
            Some(p) => Absorption::load_table(p)?,
            None => Absorption::Constant(config.absorption_coeff),
        };
        Ok(ChannelEnvironment { materials, absorption })
    }
}

/// Per-user per-subcarrier channels with their ground-truth paths.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub config: SystemConfig,
    /// `h[u][k]`: `n_bs x n_u`, `k` zero-based.
    pub h: Vec<Vec<CMat>>,
    pub paths: Vec<Vec<PathParams>>,
    /// `coeffs[u][l][k]`: `H_u[k] = sum_l coeffs * a_R(aoa, f_k) a_T(aod, f_k)^H`.
    pub coeffs: Vec<Vec<Vec<C64>>>,
}

impl ChannelRealization {
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.h.first().map_or(0, |u| u.len())
    }

    /// `[H_1[k], ..., H_U[k]]`, `n_bs x N_T`.
    pub fn stacked(&self, k: usize) -> CMat {
        let n_bs = self.config.n_bs;
        let n_u = self.config.n_u;
        let mut out = CMat::zeros(n_bs, n_u * self.num_users());
        for (u, hu) in self.h.iter().enumerate() {
            out.view_mut((0, u * n_u), (n_bs, n_u)).copy_from(&hu[k]);
        }
        out
    }

    /// Length-K time-domain taps of user `u`: inverse DFT of `H_u[k]` over
    /// `k`, so that an unnormalized forward DFT of a circular convolution
    /// returns `H_u[k] g[k]`.
    pub fn time_taps(&self, u: usize) -> Vec<CMat> {
        let kk = self.num_subcarriers();
        let (r, c) = self.h[u][0].shape();
        let ifft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_inverse(kk);
        let mut taps = vec![CMat::zeros(r, c); kk];
        let mut buf = vec![C64::new(0.0, 0.0); kk];
        for i in 0..r {
            for j in 0..c {
                for k in 0..kk {
                    buf[k] = self.h[u][k][(i, j)];
                }
                ifft.process(&mut buf);
                for n in 0..kk {
                    taps[n][(i, j)] = buf[n] / kk as f64;
                }
            }
        }
        taps
    }

    /// Beamspace ground truth `G_BS * G_T x K` (flat index `t * G_BS + r`),
    /// exact when every path sits on the dictionary grid.
    pub fn beamspace_truth(&self) -> Result<CMat> {
        let cfg = &self.config;
        let g_bs = cfg.grid_bs;
        let mut out = CMat::zeros(cfg.beamspace_dim(), self.num_subcarriers());
        for (u, paths) in self.paths.iter().enumerate() {
            for (l, p) in paths.iter().enumerate() {
                let r = nearest_grid_index(p.aoa_sine, g_bs);
                let t = nearest_grid_index(p.aod_sine, cfg.grid_tu);
                if (grid_sine(r, g_bs) - p.aoa_sine).abs() > 1e-12
                    || (grid_sine(t, cfg.grid_tu) - p.aod_sine).abs() > 1e-12
                {
                    return Err(Error::Domain(format!("user {u} path {l} is off the dictionary grid")));
                }
                let flat = (u * cfg.grid_tu + t) * g_bs + r;
                for (k, c) in self.coeffs[u][l].iter().enumerate() {
                    out[(flat, k)] += c;
                }
            }
        }
        Ok(out)
    }

    /// Zero-based flat beamspace indices of every path, sorted and deduplicated.
    pub fn support(&self) -> Vec<usize> {
        let cfg = &self.config;
        let mut s: Vec<usize> = self
            .paths
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| {
                ps.iter().map(move |p| {
                    let r = nearest_grid_index(p.aoa_sine, cfg.grid_bs);
                    let t = nearest_grid_index(p.aod_sine, cfg.grid_tu);
                    (u * cfg.grid_tu + t) * cfg.grid_bs + r
                })
            })
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Rebuild `H_u[k]` from `paths`/`coeffs`, after editing either.
    pub fn rebuild(&mut self) {
        let cfg = &self.config;
        let freqs = subcarrier_frequencies(cfg);
        for u in 0..self.h.len() {
            for (k, &f) in freqs.iter().enumerate() {
                let mut hk = CMat::zeros(cfg.n_bs, cfg.n_u);
                for (l, p) in self.paths[u].iter().enumerate() {
                    let ar = array_response(p.aoa_sine, f, cfg.carrier_freq, cfg.n_bs);
                    let at = array_response(p.aod_sine, f, cfg.carrier_freq, cfg.n_u);
                    hk += (ar * at.adjoint()) * self.coeffs[u][l][k];
                }
                self.h[u][k] = hk;
            }
        }
    }
}

fn draw_sine<R: Rng + ?Sized>(g: &super::GmmAngleParams, grid: usize, model: AngleModel, rng: &mut R) -> f64 {
    let s = sample_angles_gmm(g, rng);
    match model {
        AngleModel::Continuous => s,
        AngleModel::OnGrid => grid_sine(nearest_grid_index(s, grid), grid),
    }
}

/// Draw one realization: per user a LoS path plus `num_nlos * num_rays`
/// first-order reflections.
pub fn generate_channel<R: Rng + ?Sized>(
    config: &SystemConfig,
    env: &ChannelEnvironment,
    rng: &mut R,
) -> Result<ChannelRealization> {
    config.validate()?;
    if env.materials.is_empty() && config.num_nlos > 0 {
        return Err(Error::config("NLoS paths need at least one material"));
    }
    let kk = config.num_subcarriers;
    let ts = config.sample_period();
    let max_delay = (config.num_taps - 1) as f64 * ts;
    let freqs = subcarrier_frequencies(config);
    let ant = 10f64.powf(config.tx_gain_dbi / 20.0) * 10f64.powf(config.rx_gain_dbi / 20.0);
    let dims = (config.n_u * config.n_bs) as f64;
    let n_scatter = config.num_nlos * config.num_rays;

    let mut h = Vec::with_capacity(config.num_users);
    let mut paths = Vec::with_capacity(config.num_users);
    let mut coeffs = Vec::with_capacity(config.num_users);

    for _ in 0..config.num_users {
        let mut up: Vec<PathParams> = Vec::with_capacity(1 + n_scatter);
        let mut uc: Vec<Vec<C64>> = Vec::with_capacity(1 + n_scatter);

        let los_delay = rng.random::<f64>() * max_delay;
        let los = PathParams {
            kind: PathKind::LoS,
            delay: los_delay,
            aoa_sine: draw_sine(&config.aoa_gmm, config.grid_bs, config.angle_model, rng),
            aod_sine: draw_sine(&config.aod_gmm, config.grid_tu, config.angle_model, rng),
            incidence_angle: None,
            material: None,
            distance: config.distance,
            gain_phase: rng.random::<f64>() * 2.0 * PI,
            total_internal: false,
        };
        let beta = pulse_shaping_coeffs(los.delay, kk, ts, &config.psf);
        let scale = ant * dims.sqrt();
        let mut c = Vec::with_capacity(kk);
        for (k, &f) in freqs.iter().enumerate() {
            let a = path_gain_magnitude(f, los.distance, env.absorption.at(f), None)?;
            c.push(C64::from_polar(scale * a, los.gain_phase) * beta[k]);
        }
        up.push(los);
        uc.push(c);

        for _ in 0..n_scatter {
            let delay = rng.random::<f64>() * max_delay;
            let aoa = draw_sine(&config.aoa_gmm, config.grid_bs, config.angle_model, rng);
            let aod = draw_sine(&config.aod_gmm, config.grid_tu, config.angle_model, rng);
            let material = env.materials[rng.random_range(0..env.materials.len())].clone();
            let incidence = rng.random::<f64>() * (PI / 2.0);
            let phase = rng.random::<f64>() * 2.0 * PI;
            let distance = config.distance + SPEED_OF_LIGHT * (delay - los_delay).abs();
            let beta = pulse_shaping_coeffs(delay, kk, ts, &config.psf);
            let scale = ant * (dims / n_scatter as f64).sqrt();
            let mut tir = false;
            let mut c = Vec::with_capacity(kk);
            for (k, &f) in freqs.iter().enumerate() {
                let refl = reflection_coefficient(f, incidence, &material)?;
                tir |= refl.total_internal;
                let a = path_gain_magnitude(f, distance, env.absorption.at(f), Some(refl.coefficient))?;
                c.push(C64::from_polar(scale * a, phase) * beta[k]);
            }
            up.push(PathParams {
                kind: PathKind::NLoS,
                delay,
                aoa_sine: aoa,
                aod_sine: aod,
                incidence_angle: Some(incidence),
                material: Some(material),
                distance,
                gain_phase: phase,
                total_internal: tir,
            });
            uc.push(c);
        }

        if config.normalize_channel {
            // Unit mean entry power per user: sum_k ||H_u[k]||_F^2 = K n_bs n_u.
            let mut energy = 0.0;
            for (k, &f) in freqs.iter().enumerate() {
                let mut hk = CMat::zeros(config.n_bs, config.n_u);
                for (p, cl) in up.iter().zip(&uc) {
                    let ar = array_response(p.aoa_sine, f, config.carrier_freq, config.n_bs);
                    let at = array_response(p.aod_sine, f, config.carrier_freq, config.n_u);
                    hk += (ar * at.adjoint()) * cl[k];
                }
                energy += crate::linalg::frob_sq(&hk);
            }
            if energy > 0.0 {
                let s = (kk as f64 * dims / energy).sqrt();
                for cl in uc.iter_mut() {
                    for v in cl.iter_mut() {
                        *v *= s;
                    }
                }
            }
        }

        h.push(vec![CMat::zeros(config.n_bs, config.n_u); kk]);
        paths.push(up);
        coeffs.push(uc);
    }

    let mut out = ChannelRealization {
        config: config.clone(),
        h,
        paths,
        coeffs,
    };
    out.rebuild();
    for hu in &out.h {
        if hu.iter().any(|m| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Numerical {
                iteration: 0,
                reason: "non-finite channel entry".into(),
            });
        }
    }
    Ok(out)
}
