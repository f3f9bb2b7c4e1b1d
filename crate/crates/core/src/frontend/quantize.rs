use std::f64::consts::PI;

use crate::config::AdcBits;
use crate::error::{Error, Result};

/// Distortion factors of Lloyd-Max quantizers for 1..=5 bits.
const RHO_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// Uniform-quantizer step sizes (in units of the input standard deviation)
/// minimizing MSE for a Gaussian input, 1..=8 bits.
const GAUSS_UNIFORM_STEP: [f64; 8] = [1.596, 0.9957, 0.5860, 0.3352, 0.1881, 0.1041, 0.0568, 0.0307];

/// Bussgang linearization of a `b`-bit ADC: output `kappa * x + distortion`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationParams {
    pub bits: AdcBits,
    /// Inverse signal-to-distortion ratio.
    pub rho: f64,
    /// Bussgang gain `1 - rho`; every RF chain is scaled by the same value.
    pub kappa: f64,
}

impl QuantizationParams {
    pub fn is_ideal(&self) -> bool {
        self.kappa == 1.0
    }
}

pub fn quantization_params(bits: AdcBits) -> Result<QuantizationParams> {
    let rho = match bits {
        AdcBits::Infinite => 0.0,
        AdcBits::Finite(0) => return Err(Error::Domain("ADC needs at least one bit".into())),
        AdcBits::Finite(b @ 1..=5) => RHO_TABLE[b as usize - 1],
        AdcBits::Finite(b) => PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * b as i32),
    };
    Ok(QuantizationParams { bits, rho, kappa: 1.0 - rho })
}

/// Mid-rise uniform quantizer applied to one real component with input
/// standard deviation `std`. Bits above 8 reuse the 8-bit step halved per bit.
pub fn midrise(x: f64, bits: u32, std: f64) -> f64 {
    if std <= 0.0 {
        return 0.0;
    }
    let b = bits.max(1);
    let step_unit = if b as usize <= GAUSS_UNIFORM_STEP.len() {
        GAUSS_UNIFORM_STEP[b as usize - 1]
    } else {
        GAUSS_UNIFORM_STEP[7] * 2f64.powi(8 - b as i32)
    };
    let step = step_unit * std;
    let levels = 2f64.powi(b as i32);
    let idx = (x / step).floor().clamp(-levels / 2.0, levels / 2.0 - 1.0);
    step * (idx + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let q = quantization_params(AdcBits::Finite(1)).unwrap();
        assert_eq!(q.rho, 0.3634);
        assert!((q.kappa - 0.6366).abs() < 1e-15);
        assert_eq!(quantization_params(AdcBits::Finite(5)).unwrap().rho, 0.002499);
    }

    #[test]
    fn infinite_and_formula_branch() {
        let q = quantization_params(AdcBits::Infinite).unwrap();
        assert_eq!((q.rho, q.kappa), (0.0, 1.0));
        let q6 = quantization_params(AdcBits::Finite(6)).unwrap();
        assert!((q6.rho - 2.7207 * 2f64.powi(-12)).abs() < 1e-7);
        assert!((q6.rho - 6.6425e-4).abs() < 1e-7);
        assert!(quantization_params(AdcBits::Finite(0)).is_err());
    }

    #[test]
    fn midrise_levels() {
        let outs: std::collections::BTreeSet<i64> =
            (-100..100).map(|i| (midrise(i as f64 * 0.05, 2, 1.0) * 1e6) as i64).collect();
        assert_eq!(outs.len(), 4);
        assert_eq!(midrise(0.1, 1, 1.0), 0.798);
        assert_eq!(midrise(-0.1, 1, 1.0), -0.798);
    }
}
