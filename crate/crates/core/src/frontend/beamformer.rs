use std::f64::consts::PI;

use rand::Rng;

use crate::linalg::{CMat, C64};

/// Constant-modulus matrix with phases drawn uniformly from the
/// `2^phase_bits`-point grid.
pub fn random_phase_beamformer<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    phase_bits: u32,
    scale: f64,
    rng: &mut R,
) -> CMat {
    let levels = 1u64 << phase_bits.clamp(1, 32);
    CMat::from_fn(rows, cols, |_, _| {
        let i = rng.random_range(0..levels);
        match (levels, i) {
            // Exact values keep the two-phase grid real.
            (2, 0) => C64::new(scale, 0.0),
            (2, _) => C64::new(-scale, 0.0),
            _ => C64::from_polar(scale, 2.0 * PI * i as f64 / levels as f64),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_bit_is_real_sign() {
        let m = random_phase_beamformer(8, 8, 1, 0.5, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(m.iter().all(|z| z.im == 0.0 && z.re.abs() == 0.5));
    }

    #[test]
    fn constant_modulus() {
        let m = random_phase_beamformer(16, 4, 4, 0.25, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(m.iter().all(|z| (z.norm() - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sixteen_phase_histogram_is_uniform() {
        let m = random_phase_beamformer(1000, 100, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(2));
        let mut counts = [0f64; 16];
        for z in m.iter() {
            let k = (z.arg().rem_euclid(2.0 * PI) / (2.0 * PI / 16.0)).round() as usize % 16;
            counts[k] += 1.0;
        }
        let e = 100_000.0 / 16.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 99.9% quantile of chi-square with 15 degrees of freedom.
        assert!(chi2 < 37.70, "chi2 = {chi2}");
    }
}
