use super::{Basis, BeamspaceEstimate};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::frontend::Dictionaries;
use crate::linalg::{frob_sq, unvec, vec_of, CMat};

/// `H_hat_u[k]` for every user `u` and subcarrier `k`.
pub fn reconstruct_channel(est: &BeamspaceEstimate, dicts: &[Dictionaries], n_u: usize) -> Result<Vec<Vec<CMat>>> {
    let kk = est.h_b.ncols();
    if dicts.len() != kk {
        return Err(Error::shape(format!("{} dictionaries for {kk} subcarriers", dicts.len())));
    }
    let n_bs = dicts[0].rx.nrows();
    let n_t = dicts[0].tx.nrows();
    if n_u == 0 || n_t % n_u != 0 {
        return Err(Error::shape("transmit dimension not a multiple of n_u"));
    }
    let users = n_t / n_u;
    let mut out = vec![Vec::with_capacity(kk); users];
    for (k, d) in dicts.iter().enumerate() {
        let col: Vec<_> = est.h_b.column(k).iter().cloned().collect();
        let h = match est.basis {
            Basis::Beamspace => {
                let (g_bs, g_t) = (d.rx.ncols(), d.tx.ncols());
                let x = unvec(&col, g_bs, g_t)?;
                &d.rx * x * d.tx.adjoint()
            }
            Basis::Antenna => unvec(&col, n_bs, n_t)?,
        };
        for (u, o) in out.iter_mut().enumerate() {
            o.push(h.columns(u * n_u, n_u).into_owned());
        }
    }
    Ok(out)
}

/// Matched-filter image `A_B^H H_U[k] A_T` of a known channel `[u][k]`, laid
/// out like a beamspace estimate so that angle extraction can run on it.
pub fn matched_filter_beamspace(channel: &[Vec<CMat>], dicts: &[Dictionaries]) -> Result<BeamspaceEstimate> {
    let kk = dicts.len();
    if channel.is_empty() || channel.iter().any(|u| u.len() != kk) {
        return Err(Error::shape("one dictionary pair per subcarrier is required"));
    }
    let g = dicts[0].rx.ncols() * dicts[0].tx.ncols();
    let mut h_b = CMat::zeros(g, kk);
    for (k, d) in dicts.iter().enumerate() {
        let blocks: Vec<&CMat> = channel.iter().map(|u| &u[k]).collect();
        let h = crate::beamforming::hcat(&blocks);
        if h.shape() != (d.rx.nrows(), d.tx.nrows()) {
            return Err(Error::shape("channel does not match the dictionaries"));
        }
        let x = d.rx.adjoint() * h * &d.tx;
        h_b.set_column(k, &vec_of(&x));
    }
    Ok(BeamspaceEstimate {
        basis: Basis::Beamspace,
        h_b,
        gamma: Vec::new(),
        post_cov_diag: Vec::new(),
        iterations: 0,
        converged: true,
        trace: Vec::new(),
        rank_deficient: false,
    })
}

/// `sum ||H_hat - H||_F^2 / sum ||H||_F^2` over matching matrix lists.
pub fn nmse_metric(estimate: &[CMat], truth: &[CMat]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.iter().zip(truth).any(|(a, b)| a.shape() != b.shape()) {
        return Err(Error::shape("estimate and truth shapes differ"));
    }
    let den: f64 = truth.iter().map(frob_sq).sum();
    if den == 0.0 {
        return Err(Error::Domain("NMSE undefined for an all-zero channel".into()));
    }
    let num: f64 = estimate.iter().zip(truth).map(|(a, b)| frob_sq(&(a - b))).sum();
    Ok(num / den)
}

/// Squared error `sum ||H_hat - H||_F^2` over matching matrix lists.
pub fn squared_error(estimate: &[CMat], truth: &[CMat]) -> f64 {
    estimate.iter().zip(truth).map(|(a, b)| frob_sq(&(a - b))).sum()
}

/// Selected grid bins for one user (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAngles {
    /// Transmit bins within the user's `G_Tu` grid.
    pub tx_bins: Vec<usize>,
    /// Receive bins within the `G_BS` grid.
    pub rx_bins: Vec<usize>,
    /// Local flat indices `t * G_BS + r` in descending energy order.
    pub ranked: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleSelection {
    pub users: Vec<UserAngles>,
}

/// Rank each user's beamspace bins by energy summed over subcarriers
/// (ties to the lower index) and keep the first `n_rf_u` distinct transmit
/// bins and `n_rf_bs / U` distinct receive bins.
pub fn extract_dominant_angles(est: &BeamspaceEstimate, config: &SystemConfig) -> Result<AngleSelection> {
    if est.basis != Basis::Beamspace {
        return Err(Error::Domain("angle extraction needs a beamspace estimate".into()));
    }
    let g_bs = config.grid_bs;
    let g_tu = config.grid_tu;
    if est.h_b.nrows() != config.beamspace_dim() {
        return Err(Error::shape("estimate does not match the configured grid"));
    }
    let n_rx = config.rf_chains_per_user();
    if n_rx == 0 {
        return Err(Error::config("N_RF^B / U must be at least one"));
    }
    let block = g_bs * g_tu;
    let mut users = Vec::with_capacity(config.num_users);
    for u in 0..config.num_users {
        let energy: Vec<f64> = (0..block)
            .map(|i| est.h_b.row(u * block + i).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let mut ranked: Vec<usize> = (0..block).collect();
        ranked.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
        let mut tx_bins = Vec::new();
        let mut rx_bins = Vec::new();
        for &i in &ranked {
            let (r, t) = (i % g_bs, i / g_bs);
            if tx_bins.len() < config.n_rf_u && !tx_bins.contains(&t) {
                tx_bins.push(t);
            }
            if rx_bins.len() < n_rx && !rx_bins.contains(&r) {
                rx_bins.push(r);
            }
            if tx_bins.len() == config.n_rf_u && rx_bins.len() == n_rx {
                break;
            }
        }
        users.push(UserAngles { tx_bins, rx_bins, ranked });
    }
    Ok(AngleSelection { users })
}
