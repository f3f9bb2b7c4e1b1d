use crate::channel::{array_response, grid_sine};
use crate::config::SystemConfig;
use crate::linalg::{blkdiag, CMat};

/// `n x G` dictionary; column `r` steers to grid sine `2 r / G - 1`.
pub fn build_dictionary(grid: usize, n: usize, f_k: f64, f_c: f64) -> CMat {
    let mut d = CMat::zeros(n, grid);
    for r in 0..grid {
        d.set_column(r, &array_response(grid_sine(r, grid), f_k, f_c, n));
    }
    d
}

/// Receive and concatenated transmit dictionaries at one subcarrier.
#[derive(Debug, Clone)]
pub struct Dictionaries {
    /// `n_bs x G_BS`
    pub rx: CMat,
    /// `N_T x G_T`, block-diagonal over users.
    pub tx: CMat,
}

impl Dictionaries {
    pub fn new(config: &SystemConfig, f_k: f64) -> Self {
        let rx = build_dictionary(config.grid_bs, config.n_bs, f_k, config.carrier_freq);
        let one = build_dictionary(config.grid_tu, config.n_u, f_k, config.carrier_freq);
        let tx = blkdiag(&vec![one; config.num_users]);
        Dictionaries { rx, tx }
    }

    /// `conj(A_T) kron A_B`, mapping a beamspace vector to `vec(H_U[k])`.
    pub fn kron(&self) -> CMat {
        crate::linalg::kron(&self.tx.map(|z| z.conj()), &self.rx)
    }
}
