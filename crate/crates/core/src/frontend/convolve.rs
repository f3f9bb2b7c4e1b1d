use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Length-K circular convolution `out(q) = sum_n H(n) g((q - n) mod K)`.
/// `taps` may be shorter than `K`; missing taps are zero.
pub fn circular_convolve(taps: &[CMat], input: &[CVec]) -> Result<Vec<CVec>> {
    let kk = input.len();
    if taps.is_empty() || kk == 0 {
        return Err(Error::shape("circular convolution needs taps and input"));
    }
    if taps.len() > kk {
        return Err(Error::shape(format!("{} taps exceed block length {kk}", taps.len())));
    }
    let (rows, cols) = taps[0].shape();
    if taps.iter().any(|t| t.shape() != (rows, cols)) || input.iter().any(|g| g.len() != cols) {
        return Err(Error::shape("tap/input dimensions disagree"));
    }
    let mut out = vec![CVec::from_element(rows, C64::new(0.0, 0.0)); kk];
    for (q, o) in out.iter_mut().enumerate() {
        for (n, h) in taps.iter().enumerate() {
            *o += h * &input[(q + kk - n) % kk];
        }
    }
    Ok(out)
}
