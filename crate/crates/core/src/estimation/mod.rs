//! Channel estimation from the stacked pilot observation.

mod baselines;
mod bound;
mod recover;
mod sbl;

pub use baselines::{gsomp_estimate, mmv_ls_estimate};
pub use bound::bcrlb;
pub use recover::{
    extract_dominant_angles, matched_filter_beamspace, nmse_metric, reconstruct_channel, squared_error, AngleSelection, UserAngles,
};
pub use sbl::{
    em_group, hbg_sr_estimate, m_step, posterior, posterior_cached, posterior_covariance, sbl_per_subcarrier, EmOptions,
    Posterior, Sensing,
    GAMMA_FLOOR, PRUNE_RATIO,
};

use crate::linalg::CMat;

/// Coordinate system of [`BeamspaceEstimate::h_b`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Rows are dictionary bins, flat index `t * G_BS + r`.
    Beamspace,
    /// Rows are `vec(H_U[k])` entries (column-major `n_bs x N_T`).
    Antenna,
}

/// One EM iteration as recorded in the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub delta_gamma_sq: f64,
    /// Log-evidence up to an additive constant, at the start of the iteration.
    pub evidence: f64,
}

#[derive(Debug, Clone)]
pub struct BeamspaceEstimate {
    pub basis: Basis,
    /// One column per subcarrier.
    pub h_b: CMat,
    /// Learned hyperparameters (empty for least squares).
    pub gamma: Vec<f64>,
    /// Posterior covariance diagonal per subcarrier (empty for baselines).
    pub post_cov_diag: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    /// Least squares fell back to the minimum-norm solution.
    pub rank_deficient: bool,
}

impl BeamspaceEstimate {
    /// Trace as CSV text: `iteration,delta_gamma_sq,evidence`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,delta_gamma_sq,evidence\n");
        for t in &self.trace {
            s.push_str(&format!("{},{:.9e},{:.9e}\n", t.iteration, t.delta_gamma_sq, t.evidence));
        }
        s
    }
}
