use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::beamformer::random_phase_beamformer;
use super::dictionary::Dictionaries;
use super::quantize::{midrise, QuantizationParams};
use crate::channel::{subcarrier_frequencies, ChannelRealization};
use crate::config::{AdcBits, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{blkdiag, cn_scalar, CMat, CVec, C64};

/// Training-phase transmit and receive settings for all `M` blocks.
#[derive(Debug, Clone)]
pub struct PilotFrame {
    /// `pilots[m][u]`: `n_s_u x K`, time index along columns; the last
    /// `D - 1` columns are zero.
    pub pilots: Vec<Vec<CMat>>,
    /// `f_rf[m][u]`: `n_u x n_rf_u`, entries of modulus `1/sqrt(n_u)`.
    pub f_rf: Vec<Vec<CMat>>,
    /// `f_bb[m][u]`: `n_rf_u x n_s_u`.
    pub f_bb: Vec<Vec<CMat>>,
    /// `w_rf[m]`: `n_bs x n_rf_bs`, entries of modulus `1/sqrt(n_bs)`.
    pub w_rf: Vec<CMat>,
    /// `w_bb[m]`: `n_rf_bs x N_s`.
    pub w_bb: Vec<CMat>,
}

fn identity_columns(rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

impl PilotFrame {
    /// QPSK pilots of power `pilot_power` and random quantized-phase RF
    /// matrices; the baseband stages select the first streams/RF chains.
    pub fn random<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        let kk = config.num_subcarriers;
        let p = config.num_pilot_vectors;
        let amp = config.pilot_power.sqrt() * FRAC_1_SQRT_2;
        let mut frame = PilotFrame {
            pilots: Vec::with_capacity(config.num_blocks),
            f_rf: Vec::with_capacity(config.num_blocks),
            f_bb: Vec::with_capacity(config.num_blocks),
            w_rf: Vec::with_capacity(config.num_blocks),
            w_bb: Vec::with_capacity(config.num_blocks),
        };
        for _ in 0..config.num_blocks {
            let mut pm = Vec::with_capacity(config.num_users);
            let mut fr = Vec::with_capacity(config.num_users);
            let mut fb = Vec::with_capacity(config.num_users);
            for _ in 0..config.num_users {
                let mut b = CMat::zeros(config.n_s_u, kk);
                for q in 0..p {
                    for s in 0..config.n_s_u {
                        let re = if rng.random::<bool>() { amp } else { -amp };
                        let im = if rng.random::<bool>() { amp } else { -amp };
                        b[(s, q)] = C64::new(re, im);
                    }
                }
                pm.push(b);
                fr.push(random_phase_beamformer(
                    config.n_u,
                    config.n_rf_u,
                    config.phase_bits,
                    1.0 / (config.n_u as f64).sqrt(),
                    rng,
                ));
                fb.push(identity_columns(config.n_rf_u, config.n_s_u));
            }
            frame.pilots.push(pm);
            frame.f_rf.push(fr);
            frame.f_bb.push(fb);
            frame.w_rf.push(random_phase_beamformer(
                config.n_bs,
                config.n_rf_bs,
                config.phase_bits,
                1.0 / (config.n_bs as f64).sqrt(),
                rng,
            ));
            frame.w_bb.push(identity_columns(config.n_rf_bs, config.n_s()));
        }
        frame
    }

    pub fn num_blocks(&self) -> usize {
        self.w_rf.len()
    }

    /// Per-block stacked transmit signal in frequency: `N_T x K` whose
    /// column `k` is `[F_RF,u F_BB,u g_u[k]]_u` with `g_u[k]` the unnormalized
    /// DFT of the pilot block.
    pub fn transmit_spectrum(&self, m: usize) -> CMat {
        let users = self.pilots[m].len();
        let kk = self.pilots[m][0].ncols();
        let fft = FftPlanner::new().plan_fft_forward(kk);
        let blocks: Vec<CMat> = (0..users)
            .map(|u| {
                let mut g = self.pilots[m][u].transpose();
                for mut col in g.column_iter_mut() {
                    fft.process(col.as_mut_slice());
                }
                &self.f_rf[m][u] * &self.f_bb[m][u] * g.transpose()
            })
            .collect();
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut out = CMat::zeros(rows, kk);
        let mut r = 0;
        for b in blocks {
            out.view_mut((r, 0), b.shape()).copy_from(&b);
            r += b.nrows();
        }
        out
    }

    /// `W_BB^H W_RF^H` of block `m`, `N_s x n_bs`.
    pub fn combiner(&self, m: usize) -> CMat {
        self.w_bb[m].adjoint() * self.w_rf[m].adjoint()
    }
}

/// How the ADC enters the simulated observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcModel {
    /// Linear gain plus Gaussian distortion with the analytic covariance.
    Bussgang,
    /// Mid-rise uniform quantizer on each real component; for validating
    /// the linearized model only.
    MidRise,
}

/// Stacked training observation and its linear model.
#[derive(Debug, Clone)]
pub struct PilotObservation {
    /// `M N_s x K`; column `k` stacks blocks `m = 1..M`.
    pub y: CMat,
    /// Equivalent sensing matrix per subcarrier, `M N_s x G_BS G_T`.
    pub sensing: Vec<CMat>,
    /// Block-diagonal noise covariance of every column of `y`.
    pub noise_cov: CMat,
    pub dictionaries: Vec<Dictionaries>,
    /// Antenna-domain sensing per subcarrier, `M N_s x n_bs N_T`.
    pub antenna_sensing: Vec<CMat>,
    pub kappa: f64,
}

impl PilotObservation {
    pub fn num_subcarriers(&self) -> usize {
        self.y.ncols()
    }
}

/// Covariance terms of the linearized ADC for one block.
#[derive(Debug, Clone)]
pub struct BlockCovariance {
    /// Distortion covariance (diagonal), `n_rf_bs x n_rf_bs`.
    pub distortion: CMat,
    /// Total effective noise before baseband combining.
    pub effective: CMat,
}

/// Distortion and effective-noise covariances for each block, plus the
/// stacked covariance `R` of one observation column.
pub fn quantized_noise_covariance(
    channel: &ChannelRealization,
    frame: &PilotFrame,
    config: &SystemConfig,
    qp: &QuantizationParams,
) -> (Vec<BlockCovariance>, CMat) {
    let kk = config.num_subcarriers as f64;
    let taps: Vec<Vec<CMat>> = (0..channel.num_users()).map(|u| channel.time_taps(u)).collect();
    let mut blocks = Vec::with_capacity(frame.num_blocks());
    let mut r_blocks = Vec::with_capacity(frame.num_blocks());
    for m in 0..frame.num_blocks() {
        let w = &frame.w_rf[m];
        let wh = w.adjoint();
        let whw = &wh * w;
        let scale = qp.kappa * (1.0 - qp.kappa);
        let distortion = if scale == 0.0 {
            CMat::zeros(w.ncols(), w.ncols())
        } else {
            let mut jt = whw.scale(config.noise_power);
            for (u, tu) in taps.iter().enumerate() {
                let f = &frame.f_rf[m][u] * &frame.f_bb[m][u];
                let t = (&f * f.adjoint()).scale(config.pilot_power);
                for h in tu {
                    let a = &wh * h;
                    jt += &a * &t * a.adjoint();
                }
            }
            CMat::from_diagonal(&jt.diagonal().map(|z| C64::new(z.re * scale, 0.0)))
        };
        let effective = whw.scale(qp.kappa * qp.kappa * config.noise_power) + &distortion;
        let wbb = &frame.w_bb[m];
        r_blocks.push((wbb.adjoint() * &effective * wbb).scale(kk));
        blocks.push(BlockCovariance { distortion, effective });
    }
    (blocks, blkdiag(&r_blocks))
}

/// Run the training phase: circular convolution through the channel,
/// analog combining, ADC, K-point FFT, baseband combining. Returns the
/// stacked observation together with the matching sensing matrices.
pub fn simulate_received_pilots<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    frame: &PilotFrame,
    config: &SystemConfig,
    qp: &QuantizationParams,
    adc: AdcModel,
    rng: &mut R,
) -> Result<PilotObservation> {
    let kk = config.num_subcarriers;
    let n_s = config.n_s();
    let mm = frame.num_blocks();
    if channel.num_subcarriers() != kk || channel.num_users() != config.num_users {
        return Err(Error::shape("channel does not match the configuration"));
    }
    if mm != config.num_blocks || frame.pilots.iter().any(|b| b.iter().any(|p| p.ncols() != kk)) {
        return Err(Error::shape("pilot frame does not match the configuration"));
    }
    let (cov_blocks, noise_cov) = quantized_noise_covariance(channel, frame, config, qp);
    let freqs = subcarrier_frequencies(config);
    let stacked: Vec<CMat> = (0..kk).map(|k| channel.stacked(k)).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(kk);
    let ifft = planner.plan_fft_inverse(kk);
    let noise_std = config.noise_power.sqrt();

    let mut y = CMat::zeros(mm * n_s, kk);
    let mut tx_spectra = Vec::with_capacity(mm);
    let mut combiners = Vec::with_capacity(mm);

    for m in 0..mm {
        let x = frame.transmit_spectrum(m);
        let wh = frame.w_rf[m].adjoint();
        let n_rf = wh.nrows();
        // Analog-combined noiseless signal per subcarrier, then back to time.
        let mut sig = CMat::zeros(n_rf, kk);
        for k in 0..kk {
            sig.set_column(k, &(&wh * (&stacked[k] * x.column(k))));
        }
        let mut time = sig.transpose();
        for mut col in time.column_iter_mut() {
            ifft.process(col.as_mut_slice());
        }
        time.scale_mut(1.0 / kk as f64);
        // Thermal noise at the antennas, then analog combining.
        if noise_std > 0.0 {
            for q in 0..kk {
                let v = CVec::from_fn(config.n_bs, |_, _| cn_scalar(rng, config.noise_power));
                let wv = &wh * v;
                for i in 0..n_rf {
                    time[(q, i)] += wv[i];
                }
            }
        }
        match adc {
            AdcModel::Bussgang if !qp.is_ideal() => {
                let d = &cov_blocks[m].distortion;
                for q in 0..kk {
                    for i in 0..n_rf {
                        time[(q, i)] = time[(q, i)] * qp.kappa + cn_scalar(rng, d[(i, i)].re);
                    }
                }
            }
            AdcModel::MidRise => {
                if let AdcBits::Finite(b) = qp.bits {
                    for i in 0..n_rf {
                        let power = time.column(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / kk as f64;
                        let std = (power / 2.0).sqrt();
                        for q in 0..kk {
                            let z = time[(q, i)];
                            time[(q, i)] = C64::new(midrise(z.re, b, std), midrise(z.im, b, std));
                        }
                    }
                }
            }
            AdcModel::Bussgang => {}
        }
        for mut col in time.column_iter_mut() {
            fft.process(col.as_mut_slice());
        }
        let ym = frame.w_bb[m].adjoint() * time.transpose();
        y.view_mut((m * n_s, 0), (n_s, kk)).copy_from(&ym);
        combiners.push(frame.combiner(m).scale(qp.kappa));
        tx_spectra.push(x);
    }

    let per_k: Vec<(Dictionaries, CMat, CMat)> = (0..kk)
        .into_par_iter()
        .map(|k| {
            let dict = Dictionaries::new(config, freqs[k]);
            let (psi, omega) = sensing_at(&tx_spectra, &combiners, k, &dict);
            (dict, psi, omega)
        })
        .collect();
    let mut dictionaries = Vec::with_capacity(kk);
    let mut antenna_sensing = Vec::with_capacity(kk);
    let mut sensing = Vec::with_capacity(kk);
    for (d, p, o) in per_k {
        dictionaries.push(d);
        antenna_sensing.push(p);
        sensing.push(o);
    }
    Ok(PilotObservation {
        y,
        sensing,
        noise_cov,
        dictionaries,
        antenna_sensing,
        kappa: qp.kappa,
    })
}

/// Antenna-domain `Psi[k]` (rows `x^T kron W`) and beamspace
/// `Omega[k] = (x^T conj(A_T)) kron (W A_B)` stacked over blocks.
fn sensing_at(tx: &[CMat], combiners: &[CMat], k: usize, dict: &Dictionaries) -> (CMat, CMat) {
    let n_s = combiners[0].nrows();
    let n_bs = combiners[0].ncols();
    let n_t = tx[0].nrows();
    let g_bs = dict.rx.ncols();
    let g_t = dict.tx.ncols();
    let mm = tx.len();
    let mut psi = CMat::zeros(mm * n_s, n_bs * n_t);
    let mut omega = CMat::zeros(mm * n_s, g_bs * g_t);
    let a_t_conj = dict.tx.map(|z| z.conj());
    for m in 0..mm {
        let x = tx[m].column(k);
        let w = &combiners[m];
        for t in 0..n_t {
            psi.view_mut((m * n_s, t * n_bs), (n_s, n_bs)).copy_from(&(w * x[t]));
        }
        let txrow = x.transpose() * &a_t_conj;
        let wa = w * &dict.rx;
        for t in 0..g_t {
            let c = txrow[t];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            omega.view_mut((m * n_s, t * g_bs), (n_s, g_bs)).copy_from(&(&wa * c));
        }
    }
    (psi, omega)
}
