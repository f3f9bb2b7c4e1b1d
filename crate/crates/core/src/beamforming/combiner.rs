use std::f64::consts::PI;

use super::gain::{quantize_delays, ttd_delays};
use crate::channel::{array_response, grid_sine, subcarrier_frequencies};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::AngleSelection;
use crate::linalg::{blkdiag, cis, dominant_right_singular, frob_sq, hpd_inverse, CMat, CVec, C64};

/// Delays of a chain steered to `design` under the configured resolution.
fn chain_delays(design: f64, config: &SystemConfig, subarrays: usize) -> Vec<f64> {
    let d = ttd_delays(design, config.n_bs / subarrays, subarrays, config.carrier_period());
    match config.delay_resolution {
        Some(r) => quantize_delays(&d, r),
        None => d,
    }
}

/// Analog column for one RF chain at frequency `f_k`: the carrier steering
/// vector split into `subarrays` blocks, block `s` de-rotated by
/// `exp(j pi s P psi)` and delayed by its TTD.
pub fn analog_column(design: f64, config: &SystemConfig, subarrays: usize, f_k: f64) -> CVec {
    let delays = chain_delays(design, config, subarrays);
    column_with_delays(design, config, &delays, f_k)
}

fn column_with_delays(design: f64, config: &SystemConfig, delays: &[f64], f_k: f64) -> CVec {
    let n = config.n_bs;
    let p = n / delays.len();
    let mut a = array_response(design, config.carrier_freq, config.carrier_freq, n);
    for (i, z) in a.iter_mut().enumerate() {
        let s = i / p;
        *z *= cis(PI * (s * p) as f64 * design) * cis(-2.0 * PI * f_k * delays[s]);
    }
    a
}

/// Receive combiner with per-chain delay network, plus the user precoders
/// it was designed with. Immutable once built.
#[derive(Debug, Clone)]
pub struct TtdBeamformer {
    /// TTD elements per chain (1 = frequency-flat phased array).
    pub subarrays: usize,
    /// Steering sine of each RF chain.
    pub steering: Vec<f64>,
    /// User served by each RF chain.
    pub chain_user: Vec<usize>,
    /// Delay schedule of each chain (s), length `subarrays`.
    pub delays: Vec<Vec<f64>>,
    /// `w_rf[k]`: `n_bs x chains`.
    pub w_rf: Vec<CMat>,
    /// `w_bb[u][k]`: `chains x n_s_u`, orthonormal columns.
    pub w_bb: Vec<Vec<CMat>>,
    /// Frequency-flat user precoders `n_u x n_s_u`, `||F_u||_F^2 = n_s_u`.
    pub precoders: Vec<CMat>,
}

/// Per-subcarrier hybrid transceiver in the form every metric consumes.
#[derive(Debug, Clone)]
pub struct HybridLink {
    /// `n_bs x chains` analog stage ahead of the ADCs.
    pub w_rf: Vec<CMat>,
    /// `chains x N_s` digital stage, user blocks side by side.
    pub w_bb: Vec<CMat>,
    /// `N_T x N_s` block-diagonal precoder.
    pub precoder: Vec<CMat>,
}

impl HybridLink {
    pub fn num_subcarriers(&self) -> usize {
        self.w_rf.len()
    }

    /// Overall combiner `W_RF[k] W_BB[k]`.
    pub fn combiner(&self, k: usize) -> CMat {
        &self.w_rf[k] * &self.w_bb[k]
    }
}

impl TtdBeamformer {
    pub fn num_chains(&self) -> usize {
        self.steering.len()
    }

    pub fn link(&self) -> HybridLink {
        let kk = self.w_rf.len();
        let pre = blkdiag(&self.precoders);
        let w_bb = (0..kk)
            .map(|k| {
                let blocks: Vec<&CMat> = self.w_bb.iter().map(|u| &u[k]).collect();
                hcat(&blocks)
            })
            .collect();
        HybridLink { w_rf: self.w_rf.clone(), w_bb, precoder: vec![pre; kk] }
    }
}

pub(crate) fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), b.shape()).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Frequency-flat precoder per user: analog columns steered to the selected
/// transmit bins, digital stage from the dominant right-singular vectors of
/// the estimated channel stacked over subcarriers.
pub fn user_precoders(angles: &AngleSelection, channel: &[Vec<CMat>], config: &SystemConfig) -> Result<Vec<CMat>> {
    check_channel(channel, config)?;
    let fc = config.carrier_freq;
    let mut out = Vec::with_capacity(config.num_users);
    for (u, ua) in angles.users.iter().enumerate() {
        if ua.tx_bins.is_empty() {
            return Err(Error::Domain(format!("user {u} has no transmit bins")));
        }
        let cols: Vec<CVec> = ua
            .tx_bins
            .iter()
            .map(|&t| array_response(grid_sine(t, config.grid_tu), fc, fc, config.n_u))
            .collect();
        let f_rf = CMat::from_columns(&cols);
        let mut stacked = CMat::zeros(config.n_bs * channel[u].len(), f_rf.ncols());
        for (k, h) in channel[u].iter().enumerate() {
            stacked.view_mut((k * config.n_bs, 0), (config.n_bs, f_rf.ncols())).copy_from(&(h * &f_rf));
        }
        let f_bb = dominant_right_singular(&stacked, config.n_s_u);
        let mut f = &f_rf * f_bb;
        let e = frob_sq(&f);
        if e > 0.0 {
            f *= C64::new((config.n_s_u as f64 / e).sqrt(), 0.0);
        }
        out.push(f);
    }
    Ok(out)
}

fn check_channel(channel: &[Vec<CMat>], config: &SystemConfig) -> Result<()> {
    if channel.len() != config.num_users
        || channel.iter().any(|u| u.len() != config.num_subcarriers)
        || channel.iter().flatten().any(|h| h.shape() != (config.n_bs, config.n_u))
    {
        return Err(Error::shape("channel does not match the configuration"));
    }
    Ok(())
}

/// Combiner design from the selected receive bins and an (estimated)
/// channel `[u][k]`, using `config.tds_per_chain` delay elements per chain.
pub fn build_ttd_hybrid_combiner(angles: &AngleSelection, channel: &[Vec<CMat>], config: &SystemConfig) -> Result<TtdBeamformer> {
    build_with_subarrays(angles, channel, config, config.tds_per_chain)
}

/// Same design without delay elements: one phased-array column per chain
/// steered at the carrier.
pub fn build_flat_hybrid_combiner(angles: &AngleSelection, channel: &[Vec<CMat>], config: &SystemConfig) -> Result<TtdBeamformer> {
    build_with_subarrays(angles, channel, config, 1)
}

fn build_with_subarrays(
    angles: &AngleSelection,
    channel: &[Vec<CMat>],
    config: &SystemConfig,
    subarrays: usize,
) -> Result<TtdBeamformer> {
    if subarrays == 0 || config.n_bs % subarrays != 0 {
        return Err(Error::config(format!(
            "N_BS divisible by S ({} % {} != 0)",
            config.n_bs, subarrays
        )));
    }
    if angles.users.len() != config.num_users {
        return Err(Error::shape("angle selection does not match the user count"));
    }
    check_channel(channel, config)?;
    let mut steering = Vec::new();
    let mut chain_user = Vec::new();
    for (u, ua) in angles.users.iter().enumerate() {
        for &r in &ua.rx_bins {
            steering.push(grid_sine(r, config.grid_bs));
            chain_user.push(u);
        }
    }
    if steering.is_empty() || steering.len() > config.n_rf_bs {
        return Err(Error::config(format!(
            "1 <= selected receive bins <= N_RF^B ({} vs {})",
            steering.len(),
            config.n_rf_bs
        )));
    }
    let delays: Vec<Vec<f64>> = steering.iter().map(|&t| chain_delays(t, config, subarrays)).collect();
    let freqs = subcarrier_frequencies(config);
    let w_rf: Vec<CMat> = freqs
        .iter()
        .map(|&f| {
            let cols: Vec<CVec> =
                steering.iter().zip(&delays).map(|(&t, d)| column_with_delays(t, config, d, f)).collect();
            CMat::from_columns(&cols)
        })
        .collect();
    let w_bb = channel
        .iter()
        .map(|hu| {
            hu.iter()
                .zip(&w_rf)
                .map(|(h, w)| dominant_right_singular(&(h.adjoint() * w), config.n_s_u))
                .collect()
        })
        .collect();
    let precoders = user_precoders(angles, channel, config)?;
    Ok(TtdBeamformer { subarrays, steering, chain_user, delays, w_rf, w_bb, precoders })
}

/// Per-subcarrier SVD precoder (dominant `n_s_u` right-singular vectors of
/// `h`) and MMSE combiner `H_eq (H_eq^H H_eq + noise n_s_u I)^-1`.
pub fn optimal_digital_baseline(h: &CMat, noise_power: f64, n_s_u: usize) -> Result<(CMat, CMat)> {
    if n_s_u == 0 || n_s_u > h.nrows().min(h.ncols()) {
        return Err(Error::Domain(format!("n_s_u = {n_s_u} exceeds the channel rank bound")));
    }
    let f = dominant_right_singular(h, n_s_u);
    let heq = h * &f;
    let mut gram = heq.adjoint() * &heq;
    for i in 0..n_s_u {
        gram[(i, i)] += C64::new(noise_power * n_s_u as f64, 0.0);
    }
    let w = &heq * hpd_inverse(&gram)?;
    Ok((f, w))
}

/// Fully digital benchmark for all users: identity analog stage and the
/// per-user optimal precoders and MMSE combiners.
pub fn optimal_digital_link(channel: &[Vec<CMat>], config: &SystemConfig) -> Result<HybridLink> {
    check_channel(channel, config)?;
    let kk = config.num_subcarriers;
    let mut w_rf = Vec::with_capacity(kk);
    let mut w_bb = Vec::with_capacity(kk);
    let mut precoder = Vec::with_capacity(kk);
    for k in 0..kk {
        let mut fs = Vec::with_capacity(config.num_users);
        let mut ws = Vec::with_capacity(config.num_users);
        for hu in channel {
            let (f, w) = optimal_digital_baseline(&hu[k], config.noise_power, config.n_s_u)?;
            fs.push(f);
            ws.push(w);
        }
        w_rf.push(CMat::identity(config.n_bs, config.n_bs));
        w_bb.push(hcat(&ws.iter().collect::<Vec<_>>()));
        precoder.push(blkdiag(&fs));
    }
    Ok(HybridLink { w_rf, w_bb, precoder })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_subarray_is_carrier_steering() {
        let c = SystemConfig::desk();
        for &f in &subcarrier_frequencies(&c) {
            let w = analog_column(0.4, &c, 1, f);
            let a = array_response(0.4, c.carrier_freq, c.carrier_freq, c.n_bs);
            assert!((w - a).norm() < 1e-14);
        }
    }
}
