use rayon::prelude::*;

use super::sbl::Sensing;
use crate::error::{Error, Result};
use crate::frontend::PilotObservation;
use crate::linalg::{loaded_cholesky, SplitMat};

/// Bayesian Cramér-Rao bound on `sum_k ||H_hat[k] - H[k]||_F^2` for the
/// prior `CN(0, diag(gamma))` on each beamspace column. The Fisher matrix
/// separates over subcarriers; with `J_k^{-1} = Gamma - Gamma Omega^H C^{-1}
/// Omega Gamma` and `Z = S Gamma Omega^H` the per-subcarrier term is
/// `sum_g gamma_g ||s_g||^2 - Tr(Z C^{-1} Z^H)`.
pub fn bcrlb(obs: &PilotObservation, gamma: &[f64]) -> Result<f64> {
    if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::Domain("bound needs finite nonnegative hyperparameters".into()));
    }
    let parts: Vec<f64> = (0..obs.y.ncols())
        .into_par_iter()
        .map(|k| {
            let sensing = Sensing::new(&obs.sensing[k]);
            let c = sensing.marginal_covariance(&obs.noise_cov, gamma);
            let ch = loaded_cholesky(&c)?;
            let s = obs.dictionaries[k].kron();
            let prior: f64 = s
                .column_iter()
                .zip(gamma)
                .map(|(col, g)| g * col.norm_squared())
                .sum();
            let mut og = obs.sensing[k].clone();
            for (j, mut col) in og.column_iter_mut().enumerate() {
                col.scale_mut(gamma[j]);
            }
            let z = SplitMat::new(&s).mul(&SplitMat::new(&og).adjoint()).to_complex();
            // Tr(Z C^{-1} Z^H) = ||L^{-1} Z^H||_F^2
            let w = ch
                .l()
                .solve_lower_triangular(&z.adjoint())
                .ok_or_else(|| Error::Singular("triangular solve".into()))?;
            Ok(prior - w.norm_squared())
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}
