//! Two-component Gaussian mixture over direction sines.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mixture over direction sines. `p1`, `p2` are relative weights (normalized
/// before sampling), `nu1`, `nu2` standard deviations and `r1`, `r2` centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmAngleParams {
    pub p1: f64,
    pub p2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Default first-component center, sin(27.85 deg).
pub const DEFAULT_CENTER_1: f64 = 0.467;
pub const DEFAULT_CENTER_2: f64 = -0.3;

/// Draws beyond this count fall back to clamping the last draw.
const MAX_REJECTIONS: usize = 1_000_000;

impl GmmAngleParams {
    pub fn table_aoa() -> Self {
        GmmAngleParams {
            p1: 0.724,
            p2: 2.198,
            nu1: 0.276,
            nu2: 7.297,
            r1: DEFAULT_CENTER_1,
            r2: DEFAULT_CENTER_2,
        }
    }

    pub fn table_aod() -> Self {
        GmmAngleParams {
            p1: 0.429,
            p2: 1.811,
            nu1: 0.571,
            nu2: 12.201,
            r1: DEFAULT_CENTER_1,
            r2: DEFAULT_CENTER_2,
        }
    }

    /// Effective mixing weights `(w1, w2)`, summing to one.
    pub fn weights(&self) -> (f64, f64) {
        let s = self.p1 + self.p2;
        (self.p1 / s, self.p2 / s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.p1, self.p2, self.nu1, self.nu2, self.r1, self.r2].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("GMM parameters must be finite".into()));
        }
        if self.p1 < 0.0 || self.p2 < 0.0 || self.p1 + self.p2 <= 0.0 {
            return Err(Error::Domain("GMM weights must be nonnegative with a positive sum".into()));
        }
        if self.nu1 < 0.0 || self.nu2 < 0.0 {
            return Err(Error::Domain("GMM spreads must be nonnegative".into()));
        }
        if self.r1.abs() > 1.0 || self.r2.abs() > 1.0 {
            return Err(Error::Domain("GMM centers must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// One direction sine in `[-1, 1]`. Out-of-range draws are redrawn.
pub fn sample_angles_gmm<R: Rng + ?Sized>(params: &GmmAngleParams, rng: &mut R) -> f64 {
    let (w1, _) = params.weights();
    let mut last = 0.0;
    for _ in 0..MAX_REJECTIONS {
        let (r, nu) = if rng.random::<f64>() < w1 {
            (params.r1, params.nu1)
        } else {
            (params.r2, params.nu2)
        };
        let z: f64 = rng.sample(StandardNormal);
        last = r + nu * z;
        if (-1.0..=1.0).contains(&last) {
            return last;
        }
    }
    last.clamp(-1.0, 1.0)
}
