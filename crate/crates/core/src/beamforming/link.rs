use std::f64::consts::PI;

use nalgebra::Cholesky;
use rand::Rng;
use rustfft::FftPlanner;

use super::combiner::HybridLink;
use crate::config::{AdcBits, SystemConfig};
use crate::error::{Error, Result};
use crate::frontend::{midrise, quantization_params, AdcModel, QuantizationParams};
use crate::linalg::{cis, cn_scalar, hpd_inverse, CMat, CVec, C64};

fn stack_users(channel: &[Vec<CMat>], k: usize) -> CMat {
    let n_bs = channel[0][k].nrows();
    let n_t: usize = channel.iter().map(|u| u[k].ncols()).sum();
    let mut out = CMat::zeros(n_bs, n_t);
    let mut c = 0;
    for u in channel {
        out.view_mut((0, c), u[k].shape()).copy_from(&u[k]);
        c += u[k].ncols();
    }
    out
}

/// Linearized data-phase model of a link on each subcarrier:
/// `y[k] = h_eff[k] s[k] / sqrt(N_s) + n[k]`, `n[k] ~ CN(0, noise_cov[k])`.
#[derive(Debug, Clone)]
pub struct LinkModel {
    /// `kappa W_BB^H W_RF^H H F`, `N_s x N_s`.
    pub h_eff: Vec<CMat>,
    /// `W_BB^H (kappa^2 sigma^2 W_RF^H W_RF + D) W_BB`.
    pub noise_cov: Vec<CMat>,
    /// ADC distortion variance `D` of each RF chain.
    pub distortion: Vec<f64>,
}

/// Effective channel and noise of `link` over `channel` `[u][k]`. The ADC
/// distortion follows from the per-sample input power of each chain
/// averaged over subcarriers, with unit data power split over `N_s` streams.
pub fn link_model(link: &HybridLink, channel: &[Vec<CMat>], config: &SystemConfig, qp: &QuantizationParams) -> Result<LinkModel> {
    let kk = link.num_subcarriers();
    if channel.is_empty() || channel[0].len() != kk {
        return Err(Error::shape("link and channel disagree on the subcarrier count"));
    }
    let n_s = link.w_bb[0].ncols() as f64;
    let sigma2 = config.noise_power;
    let chains = link.w_rf[0].ncols();
    let hf: Vec<CMat> = (0..kk).map(|k| stack_users(channel, k) * &link.precoder[k]).collect();
    let mut power = vec![0.0; chains];
    for k in 0..kk {
        let wh = link.w_rf[k].adjoint();
        let a = &wh * &hf[k];
        for i in 0..chains {
            let sig: f64 = a.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / n_s;
            let noise: f64 = wh.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() * sigma2;
            power[i] += (sig + noise) / kk as f64;
        }
    }
    let scale = qp.kappa * (1.0 - qp.kappa);
    let distortion: Vec<f64> = power.iter().map(|p| p * scale).collect();
    let dmat = CMat::from_diagonal(&CVec::from_iterator(chains, distortion.iter().map(|&d| C64::new(d, 0.0))));
    let mut h_eff = Vec::with_capacity(kk);
    let mut noise_cov = Vec::with_capacity(kk);
    for k in 0..kk {
        let wbh = link.w_bb[k].adjoint();
        let wrf = &link.w_rf[k];
        h_eff.push((&wbh * wrf.adjoint() * &hf[k]).scale(qp.kappa));
        let inner = (wrf.adjoint() * wrf).scale(qp.kappa * qp.kappa * sigma2) + &dmat;
        noise_cov.push(&wbh * inner * &link.w_bb[k]);
    }
    Ok(LinkModel { h_eff, noise_cov, distortion })
}

/// `(1/K) sum_k log2 det(I + P[k]^-1 H[k] H[k]^H / N_s)` in bits/s/Hz.
pub fn spectral_efficiency(h_eff: &[CMat], noise_cov: &[CMat], n_s: usize) -> Result<f64> {
    if h_eff.len() != noise_cov.len() || h_eff.is_empty() {
        return Err(Error::shape("need one noise covariance per subcarrier"));
    }
    let mut total = 0.0;
    for (h, p) in h_eff.iter().zip(noise_cov) {
        let l = Cholesky::new(crate::linalg::hermitian_part(p))
            .ok_or_else(|| Error::Singular("noise covariance is not positive definite".into()))?;
        let g = l.l().solve_lower_triangular(h).ok_or_else(|| Error::Singular("noise covariance".into()))?;
        let mut m = (&g * g.adjoint()).scale(1.0 / n_s as f64);
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        let c = Cholesky::new(m).ok_or_else(|| Error::Singular("log-det argument".into()))?;
        total += crate::linalg::log_det_from_cholesky(&c) / std::f64::consts::LN_2;
    }
    Ok((total / h_eff.len() as f64).max(0.0))
}

/// Sum spectral efficiency of `link` over `channel` at the configured SNR
/// and ADC resolution.
pub fn link_spectral_efficiency(link: &HybridLink, channel: &[Vec<CMat>], config: &SystemConfig) -> Result<f64> {
    let qp = quantization_params(config.adc_bits)?;
    let m = link_model(link, channel, config, &qp)?;
    spectral_efficiency(&m.h_eff, &m.noise_cov, link.w_bb[0].ncols())
}

/// Gray label of 8-PSK point `i` (phase `2 pi i / 8`).
pub fn psk8_gray(i: usize) -> u8 {
    (i ^ (i >> 1)) as u8
}

pub fn psk8_point(i: usize) -> C64 {
    cis(2.0 * PI * i as f64 / 8.0)
}

/// Nearest 8-PSK point by phase.
pub fn psk8_detect(z: C64) -> usize {
    let idx = (z.arg() / (2.0 * PI / 8.0)).round() as i64;
    idx.rem_euclid(8) as usize
}

/// Bit-error count of one detection run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitErrors {
    pub errors: u64,
    pub bits: u64,
}

impl BitErrors {
    pub fn rate(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

/// Send `n_data` 8-PSK symbol vectors on every subcarrier through `truth`,
/// the analog stage, the ADC (in time, via a unitary DFT) and the digital
/// stage; equalize with the MMSE filter computed from `csi` and count bit
/// errors. `link` should be designed from the same `csi`.
#[allow(clippy::too_many_arguments)]
pub fn ber_trial<R: Rng + ?Sized>(
    truth: &[Vec<CMat>],
    csi: &[Vec<CMat>],
    link: &HybridLink,
    config: &SystemConfig,
    adc: AdcModel,
    n_data: usize,
    rng: &mut R,
) -> Result<BitErrors> {
    let qp = quantization_params(config.adc_bits)?;
    let kk = link.num_subcarriers();
    let n_s = link.w_bb[0].ncols();
    let chains = link.w_rf[0].ncols();
    let actual = link_model(link, truth, config, &qp)?;
    let assumed = link_model(link, csi, config, &qp)?;
    let amp = 1.0 / (n_s as f64).sqrt();
    // MMSE filters A^H (A A^H + P)^-1 with A = h_eff / sqrt(N_s).
    let mut filters = Vec::with_capacity(kk);
    for k in 0..kk {
        let a = assumed.h_eff[k].scale(amp);
        let cov = &a * a.adjoint() + &assumed.noise_cov[k];
        filters.push(a.adjoint() * hpd_inverse(&cov)?);
    }
    let hf: Vec<CMat> = (0..kk).map(|k| stack_users(truth, k) * &link.precoder[k]).collect();
    let whs: Vec<CMat> = link.w_rf.iter().map(|w| w.adjoint()).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(kk);
    let ifft = planner.plan_fft_inverse(kk);
    let unit = 1.0 / (kk as f64).sqrt();
    let sigma2 = config.noise_power;
    let mut count = BitErrors::default();
    let mut sym = vec![vec![0usize; n_s]; kk];
    for _ in 0..n_data {
        // chains x K analog outputs, transposed to K x chains for the DFTs.
        let mut z = CMat::zeros(kk, chains);
        for k in 0..kk {
            for s in sym[k].iter_mut() {
                *s = rng.random_range(0..8);
            }
            let x = CVec::from_iterator(n_s, sym[k].iter().map(|&i| psk8_point(i) * amp));
            let mut y = &hf[k] * x;
            if sigma2 > 0.0 {
                for v in y.iter_mut() {
                    *v += cn_scalar(rng, sigma2);
                }
            }
            let r = &whs[k] * y;
            for i in 0..chains {
                z[(k, i)] = r[i];
            }
        }
        for mut col in z.column_iter_mut() {
            ifft.process(col.as_mut_slice());
        }
        z.scale_mut(unit);
        match (adc, qp.bits) {
            (_, AdcBits::Infinite) => {}
            (AdcModel::Bussgang, _) => {
                for i in 0..chains {
                    let d = actual.distortion[i];
                    for q in 0..kk {
                        z[(q, i)] = z[(q, i)] * qp.kappa + cn_scalar(rng, d);
                    }
                }
            }
            (AdcModel::MidRise, AdcBits::Finite(b)) => {
                for i in 0..chains {
                    let p = z.column(i).iter().map(|v| v.norm_sqr()).sum::<f64>() / kk as f64;
                    let std = (p / 2.0).sqrt();
                    for q in 0..kk {
                        let v = z[(q, i)];
                        z[(q, i)] = C64::new(midrise(v.re, b, std), midrise(v.im, b, std));
                    }
                }
            }
        }
        for mut col in z.column_iter_mut() {
            fft.process(col.as_mut_slice());
        }
        z.scale_mut(unit);
        for k in 0..kk {
            let zk = z.row(k).transpose();
            let est = &filters[k] * (link.w_bb[k].adjoint() * zk);
            for (j, &tx) in sym[k].iter().enumerate() {
                let rx = psk8_detect(est[j]);
                count.errors += (psk8_gray(tx) ^ psk8_gray(rx)).count_ones() as u64;
                count.bits += 3;
            }
        }
    }
    Ok(count)
}

/// BER of a fixed link and CSI at each SNR of `snr_db`.
#[allow(clippy::too_many_arguments)]
pub fn ber_simulation<R: Rng + ?Sized>(
    truth: &[Vec<CMat>],
    csi: &[Vec<CMat>],
    link: &HybridLink,
    config: &SystemConfig,
    adc: AdcModel,
    snr_db: &[f64],
    n_data: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    snr_db
        .iter()
        .map(|&snr| {
            let c = config.clone().with_snr_db(snr);
            ber_trial(truth, csi, link, &c, adc, n_data, rng).map(|b| b.rate())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for i in 0..8 {
            let j = (i + 1) % 8;
            assert_eq!((psk8_gray(i) ^ psk8_gray(j)).count_ones(), 1);
            assert_eq!(psk8_detect(psk8_point(i) * 0.3), i);
        }
    }
}
