use rayon::prelude::*;

use super::{Basis, BeamspaceEstimate, TraceEntry};
use crate::error::{Error, Result};
use crate::frontend::PilotObservation;
use crate::linalg::{hpd_inverse, loaded_cholesky, log_det_from_cholesky, CMat, CVec, SplitMat, C64};

/// Hyperparameters never drop below this value.
pub const GAMMA_FLOOR: f64 = 1e-12;
/// Rows with `gamma < PRUNE_RATIO * max(gamma)` are zeroed in the output.
pub const PRUNE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once `||gamma_j - gamma_{j-1}||^2 <= epsilon`.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { epsilon: 1e-4, max_iter: 30 }
    }
}

/// Gaussian posterior of `h ~ CN(0, diag(gamma))` given `y = Omega h + n`,
/// `n ~ CN(0, R)`.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub mean: CVec,
    pub cov_diag: Vec<f64>,
    /// `log det C + y^H C^{-1} y` with `C = R + Omega Gamma Omega^H`.
    pub neg_log_evidence: f64,
}

/// A sensing matrix with cached real/imaginary parts for the repeated
/// products of the E-step.
#[derive(Debug, Clone)]
pub struct Sensing {
    pub omega: CMat,
    split: SplitMat,
    split_t: SplitMat,
}

impl Sensing {
    pub fn new(omega: &CMat) -> Self {
        let split = SplitMat::new(omega);
        let split_t = SplitMat {
            re: split.re.transpose(),
            im: split.im.transpose(),
        };
        Sensing { omega: omega.clone(), split, split_t }
    }

    /// `C = R + Omega diag(gamma) Omega^H`.
    pub fn marginal_covariance(&self, r: &CMat, gamma: &[f64]) -> CMat {
        let mut p = self.split.re.clone();
        let mut q = self.split.im.clone();
        for (j, &g) in gamma.iter().enumerate() {
            p.column_mut(j).scale_mut(g);
            q.column_mut(j).scale_mut(g);
        }
        let mut c_re = &p * &self.split_t.re;
        c_re.gemm(1.0, &q, &self.split_t.im, 1.0);
        let mut c_im = &q * &self.split_t.re;
        c_im.gemm(-1.0, &p, &self.split_t.im, 1.0);
        r + c_re.zip_map(&c_im, C64::new)
    }
}

/// Posterior mean, covariance diagonal and evidence term. Uses the
/// `n x n` Woodbury form when the observation is shorter than the
/// dictionary and the `G x G` information form otherwise.
pub fn posterior(omega: &CMat, r: &CMat, gamma: &[f64], y: &CVec) -> Result<Posterior> {
    posterior_cached(&Sensing::new(omega), r, gamma, y)
}

pub fn posterior_cached(s: &Sensing, r: &CMat, gamma: &[f64], y: &CVec) -> Result<Posterior> {
    let omega = &s.omega;
    let (n, g) = omega.shape();
    if gamma.len() != g || r.shape() != (n, n) || y.len() != n {
        return Err(Error::shape("posterior: inconsistent dimensions"));
    }
    let c = s.marginal_covariance(r, gamma);
    let ch = loaded_cholesky(&c)?;
    let cy = ch.solve(y);
    let neg_log_evidence = log_det_from_cholesky(&ch) + y.dotc(&cy).re;
    if n < g {
        // mean = Gamma Omega^H C^{-1} y
        let (vr, vi) = (cy.map(|z| z.re), cy.map(|z| z.im));
        let mut wr = &s.split_t.re * &vr;
        wr.gemv(1.0, &s.split_t.im, &vi, 1.0);
        let mut wi = &s.split_t.re * &vi;
        wi.gemv(-1.0, &s.split_t.im, &vr, 1.0);
        let mean = CVec::from_fn(g, |j, _| C64::new(wr[j], wi[j]) * gamma[j]);
        // diag(Omega^H C^{-1} Omega) from X = C^{-1} Omega.
        let x = SplitMat::new(&ch.inverse()).mul(&s.split);
        let cov_diag = (0..g)
            .map(|j| {
                let q: f64 = s.split.re.column(j).dot(&x.re.column(j)) + s.split.im.column(j).dot(&x.im.column(j));
                (gamma[j] - gamma[j] * gamma[j] * q).max(0.0)
            })
            .collect();
        Ok(Posterior { mean, cov_diag, neg_log_evidence })
    } else {
        let sigma = info_form_cov(omega, r, gamma)?;
        let rinv_y = hpd_inverse(r)? * y;
        let mean = &sigma * (omega.adjoint() * rinv_y);
        let cov_diag = (0..g).map(|j| sigma[(j, j)].re.max(0.0)).collect();
        Ok(Posterior { mean, cov_diag, neg_log_evidence })
    }
}

/// Full posterior covariance `Gamma - Gamma Omega^H C^{-1} Omega Gamma`.
pub fn posterior_covariance(omega: &CMat, r: &CMat, gamma: &[f64]) -> Result<CMat> {
    let (n, g) = omega.shape();
    if n < g {
        let og = scale_columns(omega, gamma);
        let c = r + &og * omega.adjoint();
        let ch = loaded_cholesky(&c)?;
        let x = ch.solve(&og);
        let mut s = -(og.adjoint() * x);
        for j in 0..g {
            s[(j, j)] += gamma[j];
        }
        Ok(s)
    } else {
        info_form_cov(omega, r, gamma)
    }
}

/// `G^1/2 (G^1/2 Omega^H R^-1 Omega G^1/2 + I)^-1 G^1/2`: eigenvalues of the
/// inverted matrix are at least one, and zero hyperparameters give exact
/// zero rows.
fn info_form_cov(omega: &CMat, r: &CMat, gamma: &[f64]) -> Result<CMat> {
    let g = omega.ncols();
    let root: Vec<f64> = gamma.iter().map(|v| v.max(0.0).sqrt()).collect();
    let rinv = hpd_inverse(r)?;
    let scaled = scale_columns(omega, &root);
    let mut j = scaled.adjoint() * rinv * &scaled;
    for i in 0..g {
        j[(i, i)] += 1.0;
    }
    let mut s = hpd_inverse(&j)?;
    for a in 0..g {
        for b in 0..g {
            s[(a, b)] *= root[a] * root[b];
        }
    }
    Ok(s)
}

fn scale_columns(m: &CMat, s: &[f64]) -> CMat {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.scale_mut(s[j]);
    }
    out
}

/// M-step: `gamma_g = (1/K) sum_k (Sigma_k(g,g) + |mu_k(g)|^2)`.
pub fn m_step(cov_diags: &[Vec<f64>], means: &[CVec]) -> Vec<f64> {
    let g = cov_diags[0].len();
    let kk = cov_diags.len() as f64;
    (0..g)
        .map(|i| {
            let s: f64 = cov_diags.iter().zip(means).map(|(d, m)| d[i] + m[i].norm_sqr()).sum();
            (s / kk).max(GAMMA_FLOOR)
        })
        .collect()
}

/// EM over a shared hyperparameter vector for columns `y[:, k]` with
/// per-column sensing matrices and a common noise covariance.
pub fn em_group(y: &CMat, sensing: &[CMat], r: &CMat, opts: &EmOptions) -> Result<BeamspaceEstimate> {
    let kk = y.ncols();
    if sensing.len() != kk || kk == 0 {
        return Err(Error::shape("one sensing matrix per observation column required"));
    }
    let g = sensing[0].ncols();
    let cached: Vec<Sensing> = sensing.par_iter().map(Sensing::new).collect();
    let mut gamma = vec![1.0; g];
    let mut trace = Vec::new();
    let mut means: Vec<CVec> = Vec::new();
    let mut cov_diags: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for j in 1..=opts.max_iter.max(1) {
        let posts: Vec<Posterior> = (0..kk)
            .into_par_iter()
            .map(|k| posterior_cached(&cached[k], r, &gamma, &y.column(k).into_owned()))
            .collect::<Result<_>>()?;
        let evidence = -posts.iter().map(|p| p.neg_log_evidence).sum::<f64>();
        means = posts.iter().map(|p| p.mean.clone()).collect();
        cov_diags = posts.into_iter().map(|p| p.cov_diag).collect();
        let new_gamma = m_step(&cov_diags, &means);
        if new_gamma.iter().any(|v| !v.is_finite()) || means.iter().any(|m| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Numerical { iteration: j, reason: "non-finite posterior".into() });
        }
        let delta: f64 = new_gamma.iter().zip(&gamma).map(|(a, b)| (a - b).powi(2)).sum();
        trace.push(TraceEntry { iteration: j, delta_gamma_sq: delta, evidence });
        gamma = new_gamma;
        iterations = j;
        if delta <= opts.epsilon {
            converged = true;
            break;
        }
    }
    let gmax = gamma.iter().cloned().fold(0.0, f64::max);
    let mut h_b = CMat::zeros(g, kk);
    for (k, m) in means.iter().enumerate() {
        h_b.set_column(k, m);
    }
    for (i, &v) in gamma.iter().enumerate() {
        if v < PRUNE_RATIO * gmax {
            h_b.row_mut(i).fill(C64::new(0.0, 0.0));
        }
    }
    Ok(BeamspaceEstimate {
        basis: Basis::Beamspace,
        h_b,
        gamma,
        post_cov_diag: cov_diags,
        iterations,
        converged,
        trace,
        rank_deficient: false,
    })
}

/// Group-sparse EM estimate: one hyperparameter per beamspace bin shared by
/// all subcarriers.
pub fn hbg_sr_estimate(obs: &PilotObservation, opts: &EmOptions) -> Result<BeamspaceEstimate> {
    em_group(&obs.y, &obs.sensing, &obs.noise_cov, opts)
}

/// The same learner run independently on each subcarrier.
pub fn sbl_per_subcarrier(obs: &PilotObservation, opts: &EmOptions) -> Result<BeamspaceEstimate> {
    let kk = obs.y.ncols();
    let parts: Vec<BeamspaceEstimate> = (0..kk)
        .into_par_iter()
        .map(|k| {
            let yk = CMat::from_column_slice(obs.y.nrows(), 1, obs.y.column(k).as_slice());
            em_group(&yk, std::slice::from_ref(&obs.sensing[k]), &obs.noise_cov, opts)
        })
        .collect::<Result<_>>()?;
    let g = parts[0].h_b.nrows();
    let mut h_b = CMat::zeros(g, kk);
    let mut gamma = vec![0.0; g];
    let mut post = Vec::with_capacity(kk);
    let mut trace = Vec::new();
    for (k, p) in parts.iter().enumerate() {
        h_b.set_column(k, &p.h_b.column(0));
        for (a, b) in gamma.iter_mut().zip(&p.gamma) {
            *a += b / kk as f64;
        }
        post.push(p.post_cov_diag[0].clone());
        trace.extend(p.trace.iter().cloned());
    }
    Ok(BeamspaceEstimate {
        basis: Basis::Beamspace,
        h_b,
        gamma,
        post_cov_diag: post,
        iterations: parts.iter().map(|p| p.iterations).max().unwrap_or(0),
        converged: parts.iter().all(|p| p.converged),
        trace,
        rank_deficient: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_posterior() {
        let one = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let p = posterior(&one, &one, &[1.0], &CVec::from_element(1, C64::new(2.0, 0.0))).unwrap();
        assert!((p.mean[0].re - 1.0).abs() < 1e-10);
        assert!((p.cov_diag[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn m_step_arithmetic() {
        let g = m_step(
            &[vec![0.5], vec![0.5]],
            &[CVec::from_element(1, C64::new(1.0, 0.0)), CVec::from_element(1, C64::new(0.0, 0.0))],
        );
        assert_eq!(g, vec![1.0]);
    }
}
