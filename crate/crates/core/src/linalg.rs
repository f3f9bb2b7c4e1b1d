//! Dense complex linear-algebra helpers shared by the signal chain.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative diagonal loading applied before Hermitian factorizations.
pub const LOADING_FLOOR: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(j * phase)`
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut blk = out.view_mut((i * br, j * bc), (br, bc));
            blk.zip_apply(b, |o, v| *o = s * v);
        }
    }
    out
}

pub fn blkdiag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), b.shape()).copy_from(b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::shape(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMat::from_column_slice(rows, cols, v))
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Cholesky factor of a Hermitian PSD matrix after adding
/// `LOADING_FLOOR * trace / dim` to the diagonal. The loading is escalated
/// when the factorization still fails.
pub fn loaded_cholesky(m: &CMat) -> Result<Cholesky<C64, Dyn>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::shape(format!("cholesky of non-square {}x{}", n, m.ncols())));
    }
    let h = hermitian_part(m);
    let scale = (trace_re(&h) / n.max(1) as f64).abs();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut load = LOADING_FLOOR * scale;
    for _ in 0..8 {
        let mut a = h.clone();
        for i in 0..n {
            a[(i, i)] += load;
        }
        if let Some(ch) = Cholesky::new(a) {
            return Ok(ch);
        }
        load *= 100.0;
    }
    Err(Error::Singular("hermitian factorization failed after loading".into()))
}

pub fn log_det_from_cholesky(ch: &Cholesky<C64, Dyn>) -> f64 {
    let l = ch.l_dirty();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

/// Inverse of a Hermitian PSD matrix through [`loaded_cholesky`].
pub fn hpd_inverse(m: &CMat) -> Result<CMat> {
    Ok(loaded_cholesky(m)?.inverse())
}

/// Moore-Penrose pseudo-inverse. The flag is set when `m` lacks full column rank.
pub fn pinv(m: &CMat) -> (CMat, bool) {
    let (r, c_) = m.shape();
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * (r.max(c_) as f64) * f64::EPSILON;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = CMat::zeros(c_, r);
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            rank += 1;
            let vi = vt.row(i).adjoint();
            let ui = u.column(i).adjoint();
            out += (vi * ui).scale(1.0 / s);
        }
    }
    (out, rank < c_)
}

/// Leading `n` right-singular vectors (columns), singular values descending.
pub fn dominant_right_singular(m: &CMat, n: usize) -> CMat {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = CMat::zeros(m.ncols(), n);
    for (j, &i) in order.iter().take(n).enumerate() {
        out.set_column(j, &vt.row(i).adjoint());
    }
    out
}

/// Complex matrix stored as separate real and imaginary parts, so products
/// go through the blocked real kernels.
#[derive(Debug, Clone)]
pub struct SplitMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMat {
    pub fn new(m: &CMat) -> Self {
        SplitMat {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    /// Parts of the conjugate transpose.
    pub fn adjoint(&self) -> Self {
        SplitMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn mul(&self, rhs: &SplitMat) -> SplitMat {
        let mut re = &self.re * &rhs.re;
        re.gemm(-1.0, &self.im, &rhs.im, 1.0);
        let mut im = &self.re * &rhs.im;
        im.gemm(1.0, &self.im, &rhs.re, 1.0);
        SplitMat { re, im }
    }

    pub fn to_complex(&self) -> CMat {
        self.re.zip_map(&self.im, C64::new)
    }
}

/// `a * b` through [`SplitMat`].
pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    SplitMat::new(a).mul(&SplitMat::new(b)).to_complex()
}

/// Draw a circularly-symmetric complex Gaussian scalar with variance `var`.
pub fn cn_scalar<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVec {
    CVec::from_fn(n, |_, _| cn_scalar(rng, var))
}

/// Real vector -> diagonal complex matrix.
pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

/// Minimum eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let h = hermitian_part(m);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_matches_definition() {
        let a = CMat::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64));
        let b = CMat::from_fn(3, 2, |i, j| c(j as f64, -(i as f64)));
        let k = kron(&a, &b);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(k[(i, j)], a[(i / 3, j / 2)] * b[(i % 3, j % 2)]);
            }
        }
    }

    #[test]
    fn split_product_matches_complex() {
        let a = CMat::from_fn(3, 5, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.3));
        let b = CMat::from_fn(5, 2, |i, j| c(0.5 * j as f64, 1.0 - i as f64));
        assert!((cmul(&a, &b) - &a * &b).norm() < 1e-12);
        let ah = SplitMat::new(&a).adjoint().to_complex();
        assert_eq!(ah, a.adjoint());
    }

    #[test]
    fn pinv_flags_rank_deficiency() {
        let m = CMat::from_fn(2, 4, |i, j| c((i + j) as f64, 0.5 * i as f64));
        let (p, deficient) = pinv(&m);
        assert!(deficient);
        let mpm = &m * &p * &m;
        assert!(frob_sq(&(mpm - &m)) < 1e-18);
    }

    #[test]
    fn loaded_cholesky_handles_zero_matrix() {
        let z = CMat::zeros(3, 3);
        assert!(loaded_cholesky(&z).is_ok());
    }
}
