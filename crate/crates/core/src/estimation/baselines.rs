use rayon::prelude::*;

use super::{Basis, BeamspaceEstimate};
use crate::error::{Error, Result};
use crate::frontend::PilotObservation;
use crate::linalg::{pinv, CMat, CVec, C64};

/// Per-subcarrier least squares over the antenna-domain channel
/// `vec(H_U[k])`. Falls back to the minimum-norm solution, flagged in
/// `rank_deficient`, when the stacked sensing matrix lacks column rank.
pub fn mmv_ls_estimate(obs: &PilotObservation) -> Result<BeamspaceEstimate> {
    let kk = obs.y.ncols();
    let cols: Vec<(CVec, bool)> = (0..kk)
        .into_par_iter()
        .map(|k| {
            let (p, deficient) = pinv(&obs.antenna_sensing[k]);
            (p * obs.y.column(k), deficient)
        })
        .collect();
    let dim = obs.antenna_sensing[0].ncols();
    let mut h = CMat::zeros(dim, kk);
    let mut deficient = false;
    for (k, (v, d)) in cols.into_iter().enumerate() {
        h.set_column(k, &v);
        deficient |= d;
    }
    Ok(BeamspaceEstimate {
        basis: Basis::Antenna,
        h_b: h,
        gamma: Vec::new(),
        post_cov_diag: Vec::new(),
        iterations: 1,
        converged: true,
        trace: Vec::new(),
        rank_deficient: deficient,
    })
}

/// Generalized simultaneous OMP: picks the bin with the largest summed
/// normalized correlation over all subcarriers, refits by least squares per
/// subcarrier on the active set, and stops at `max_support` atoms or when
/// the total residual energy drops to `residual_tol`.
pub fn gsomp_estimate(obs: &PilotObservation, max_support: usize, residual_tol: f64) -> Result<BeamspaceEstimate> {
    let kk = obs.y.ncols();
    let (n, g) = obs.sensing[0].shape();
    if max_support > n {
        return Err(Error::Domain(format!("support {max_support} exceeds observation length {n}")));
    }
    let norms: Vec<Vec<f64>> = obs
        .sensing
        .iter()
        .map(|o| o.column_iter().map(|c| c.norm()).collect())
        .collect();
    let mut active: Vec<usize> = Vec::new();
    let mut resid: Vec<CVec> = (0..kk).map(|k| obs.y.column(k).into_owned()).collect();
    let mut coefs: Vec<CVec> = vec![CVec::zeros(0); kk];
    let mut iterations = 0;
    while active.len() < max_support {
        let energy: f64 = resid.iter().map(|r| r.norm_squared()).sum();
        if energy <= residual_tol {
            break;
        }
        let mut best = None;
        let mut best_score = -1.0;
        for j in 0..g {
            if active.contains(&j) {
                continue;
            }
            let score: f64 = (0..kk)
                .map(|k| {
                    let nrm = norms[k][j];
                    if nrm > 0.0 {
                        obs.sensing[k].column(j).dotc(&resid[k]).norm() / nrm
                    } else {
                        0.0
                    }
                })
                .sum();
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        active.push(j);
        iterations += 1;
        let fits: Vec<(CVec, CVec)> = (0..kk)
            .into_par_iter()
            .map(|k| {
                let sub = obs.sensing[k].select_columns(active.iter());
                let (p, _) = pinv(&sub);
                let yk = obs.y.column(k);
                let c = &p * yk;
                let r = yk - &sub * &c;
                (c, r)
            })
            .collect();
        for (k, (c, r)) in fits.into_iter().enumerate() {
            coefs[k] = c;
            resid[k] = r;
        }
    }
    let mut h = CMat::zeros(g, kk);
    for k in 0..kk {
        for (i, &j) in active.iter().enumerate() {
            h[(j, k)] = coefs[k][i];
        }
    }
    let mut gamma = vec![0.0; g];
    for &j in &active {
        gamma[j] = h.row(j).iter().map(C64::norm_sqr).sum::<f64>() / kk as f64;
    }
    Ok(BeamspaceEstimate {
        basis: Basis::Beamspace,
        h_b: h,
        gamma,
        post_cov_diag: Vec::new(),
        iterations,
        converged: true,
        trace: Vec::new(),
        rank_deficient: false,
    })
}
