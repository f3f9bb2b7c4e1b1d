//! Spreading, molecular absorption and first-order rough-surface reflection.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::SPEED_OF_LIGHT;

/// Free-space permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * PI;
/// Free-space permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Intrinsic impedance of free space used in the Fresnel formula (ohm).
pub const Z_0: f64 = 377.0;

/// Reflecting material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Surface roughness standard deviation, mm.
    pub roughness_mm: f64,
    /// Absorption coefficient, 1/cm.
    pub absorption_per_cm: f64,
    pub refractive_index: f64,
}

impl Material {
    pub fn new(name: &str, roughness_mm: f64, absorption_per_cm: f64, refractive_index: f64) -> Result<Self> {
        let m = Material {
            name: name.to_string(),
            roughness_mm,
            absorption_per_cm,
            refractive_index,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.roughness_mm >= 0.0) || !(self.absorption_per_cm >= 0.0) || !(self.refractive_index >= 1.0) {
            return Err(Error::Domain(format!(
                "material `{}` needs sigma_r >= 0, xi >= 0, n >= 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Indoor scatterers used by default.
    pub fn table() -> Vec<Material> {
        [
            ("Polycarbonate (PC)", 0.0, 23.0, 1.52),
            ("Polystyrene (PS)", 0.002, 2.0, 1.6),
            ("Polyvinyl chloride (PVC)", 0.028, 19.0, 1.68),
            ("Plaster s1", 0.05, 10.0, 2.0),
            ("Gypsum plaster", 0.13, 38.0, 1.4),
            ("Plaster s2", 0.15, 10.0, 2.0),
        ]
        .iter()
        .map(|&(n, s, x, r)| Material::new(n, s, x, r).expect("table rows are valid"))
        .collect()
    }

    pub fn by_name(name: &str) -> Option<Material> {
        Self::table().into_iter().find(|m| m.name.eq_ignore_ascii_case(name))
    }

    /// Characteristic impedance of the medium at frequency `f`.
    pub fn impedance(&self, f: f64) -> C64 {
        let xi = self.absorption_per_cm * 100.0;
        let n = self.refractive_index;
        let a = xi * SPEED_OF_LIGHT / (4.0 * PI * f);
        let eps_r = C64::new(n * n - a * a, -2.0 * n * a);
        (C64::new(MU_0, 0.0) / (eps_r * EPSILON_0)).sqrt()
    }
}

/// Parse a whitespace-separated material table. Each non-comment line holds
/// `name sigma_r_mm xi_per_cm n`; the name may contain spaces, the last three
/// fields are numeric. Lines starting with `#` are skipped.
pub fn parse_materials(text: &str) -> Result<Vec<Material>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.len() < 4 {
            return Err(Error::Parse(format!("materials line {}: expected 4 columns", lineno + 1)));
        }
        let nums: Vec<f64> = fields[fields.len() - 3..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("materials line {}: {e}", lineno + 1)))?;
        let name = fields[..fields.len() - 3].join(" ");
        out.push(Material::new(&name, nums[0], nums[1], nums[2])?);
    }
    if out.is_empty() {
        return Err(Error::Parse("materials table is empty".into()));
    }
    Ok(out)
}

pub fn load_materials(path: impl AsRef<Path>) -> Result<Vec<Material>> {
    parse_materials(&std::fs::read_to_string(path)?)
}

/// Molecular absorption coefficient, constant or tabulated over frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum Absorption {
    Constant(f64),
    /// `(frequency Hz, mu_abs 1/m)` rows sorted by frequency; linearly
    /// interpolated, clamped at the ends.
    Table(Vec<(f64, f64)>),
}

impl Absorption {
    pub fn at(&self, f: f64) -> f64 {
        match self {
            Absorption::Constant(mu) => *mu,
            Absorption::Table(rows) => {
                let first = rows[0];
                let last = rows[rows.len() - 1];
                if f <= first.0 {
                    return first.1;
                }
                if f >= last.0 {
                    return last.1;
                }
                let i = rows.partition_point(|r| r.0 <= f);
                let (f0, m0) = rows[i - 1];
                let (f1, m1) = rows[i];
                m0 + (m1 - m0) * (f - f0) / (f1 - f0)
            }
        }
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("absorption line {}: {e}", lineno + 1)))?;
            if v.len() != 2 || !(v[1] >= 0.0) {
                return Err(Error::Parse(format!(
                    "absorption line {}: expected `frequency mu_abs` with mu_abs >= 0",
                    lineno + 1
                )));
            }
            rows.push((v[0], v[1]));
        }
        if rows.is_empty() {
            return Err(Error::Parse("absorption table is empty".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Absorption::Table(rows))
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }
}

/// Rough-surface reflection `Gamma = gamma * phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub coefficient: C64,
    pub fresnel: C64,
    pub roughness: f64,
    /// `|sin(w_i) Z / Z_0| > 1`: Fresnel term forced to unit magnitude.
    pub total_internal: bool,
}

pub fn reflection_coefficient(f: f64, incidence: f64, material: &Material) -> Result<Reflection> {
    if !(0.0..PI / 2.0).contains(&incidence) {
        return Err(Error::Domain(format!("incidence angle {incidence} outside [0, pi/2)")));
    }
    let z = material.impedance(f);
    let (sin_i, cos_i) = incidence.sin_cos();
    let sin_r = z * sin_i / Z_0;
    let total_internal = sin_r.norm() > 1.0;
    let cos_r = (C64::new(1.0, 0.0) - sin_r * sin_r).sqrt();
    let mut fresnel = (z * cos_i - Z_0 * cos_r) / (z * cos_i + Z_0 * cos_r);
    if total_internal {
        fresnel /= fresnel.norm();
    }
    let sigma = material.roughness_mm * 1e-3;
    let x = 4.0 * PI * f * sigma * cos_i / SPEED_OF_LIGHT;
    let roughness = (-0.5 * x * x).exp();
    Ok(Reflection {
        coefficient: fresnel * roughness,
        fresnel,
        roughness,
        total_internal,
    })
}

/// `|alpha|` from spreading loss, absorption and an optional reflection.
pub fn path_gain_magnitude(f: f64, distance: f64, mu_abs: f64, reflection: Option<C64>) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    if !(f > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {f}")));
    }
    let spread = SPEED_OF_LIGHT / (4.0 * PI * f * distance);
    let mut power = spread * spread * (-mu_abs * distance).exp();
    if let Some(g) = reflection {
        power *= g.norm_sqr();
    }
    Ok(power.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn smooth_material_has_unit_roughness_factor() {
        let pc = Material::by_name("Polycarbonate (PC)").unwrap();
        let r = reflection_coefficient(0.65e12, 0.3, &pc).unwrap();
        assert_eq!(r.roughness, 1.0);
        assert_eq!(r.coefficient, r.fresnel);
    }

    #[test]
    fn very_rough_surface_kills_reflection() {
        let m = Material::new("rough", 1e3, 10.0, 2.0).unwrap();
        let r = reflection_coefficient(0.65e12, 0.2, &m).unwrap();
        assert!(r.roughness < 1e-300 || r.roughness == 0.0);
        assert!(r.coefficient.norm() < 1e-300);
    }

    // Reference values from a standalone evaluation of the impedance,
    // Fresnel and roughness formulas (mu_0 = 4 pi 1e-7, c = 3e8).
    #[test]
    fn plaster_s1_regression() {
        let m = Material::by_name("Plaster s1").unwrap();
        let r = reflection_coefficient(0.65e12, PI / 4.0, &m).unwrap();
        let z = m.impedance(0.65e12);
        assert_relative_eq!(z.re, 188.301_654_371_463_17, max_relative = 1e-12);
        assert_relative_eq!(z.im, 3.457_977_586_799_997, max_relative = 1e-10);
        assert_relative_eq!(r.roughness, 0.629_189_311_431_476_6, max_relative = 1e-12);
        assert_relative_eq!(r.coefficient.re, -0.284_317_940_213_269_1, max_relative = 1e-10);
        assert_relative_eq!(r.coefficient.im, 0.005_252_513_573_238_816, max_relative = 1e-8);
        assert!(!r.total_internal);
    }

    #[test]
    fn passive_materials_never_amplify() {
        for m in Material::table() {
            for i in 0..40 {
                let w = i as f64 * (PI / 2.0) / 40.0;
                for f in [0.3e12, 0.65e12, 1.0e12] {
                    let r = reflection_coefficient(f, w, &m).unwrap();
                    assert!(r.coefficient.norm() <= 1.0 + 1e-12, "{} {w} {f}", m.name);
                }
            }
        }
    }

    #[test]
    fn grazing_incidence_rejected() {
        let m = Material::by_name("Plaster s2").unwrap();
        assert!(reflection_coefficient(1e12, PI / 2.0, &m).is_err());
    }

    #[test]
    fn total_internal_branch_is_unit_magnitude() {
        // Refractive index below one is not a table material but exercises the branch.
        let m = Material {
            name: "thin".into(),
            roughness_mm: 0.0,
            absorption_per_cm: 0.0,
            refractive_index: 0.5,
        };
        let r = reflection_coefficient(0.65e12, 1.2, &m).unwrap();
        assert!(r.total_internal);
        assert_relative_eq!(r.fresnel.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spreading_loss_at_table_distance() {
        let a = path_gain_magnitude(0.65e12, 15.0, 0.0, None).unwrap();
        let p = a * a;
        assert_relative_eq!(p, 5.996e-12, max_relative = 1e-3);
        assert!((10.0 * p.log10() + 112.22).abs() < 0.01);
    }

    #[test]
    fn absorption_factor_at_table_values() {
        let with = path_gain_magnitude(0.65e12, 15.0, 0.015, None).unwrap();
        let without = path_gain_magnitude(0.65e12, 15.0, 0.0, None).unwrap();
        assert_relative_eq!((with / without).powi(2), (-0.225f64).exp(), max_relative = 1e-14);
        assert!(((with / without).powi(2) - 0.79852).abs() < 1e-5);
    }

    #[test]
    fn nonpositive_distance_is_domain_error() {
        assert!(matches!(path_gain_magnitude(1e12, 0.0, 0.0, None), Err(Error::Domain(_))));
        assert!(path_gain_magnitude(1e12, -1.0, 0.0, None).is_err());
    }

    #[test]
    fn material_table_round_trip() {
        let text = "# name sigma_r xi n\nPlaster s1 0.05 10 2\nPolystyrene (PS) 0.002 2 1.6\n";
        let mats = parse_materials(text).unwrap();
        assert_eq!(mats.len(), 2);
        assert_eq!(mats[0].name, "Plaster s1");
        assert_eq!(mats[1].refractive_index, 1.6);
        assert!(parse_materials("bad 1 2\n").is_err());
        assert!(parse_materials("neg -1 2 3\n").is_err());
    }

    #[test]
    fn absorption_table_interpolates() {
        let t = Absorption::parse_table("1e12 0.02\n0.5e12 0.01\n").unwrap();
        assert_relative_eq!(t.at(0.75e12), 0.015, epsilon = 1e-15);
        assert_eq!(t.at(0.1e12), 0.01);
        assert_eq!(t.at(2e12), 0.02);
    }

    proptest! {
        #[test]
        fn gain_decreases_with_distance_and_absorption(
            f in 0.1e12f64..1e12, d in 0.5f64..50.0, dd in 0.01f64..10.0,
            mu in 0.0f64..0.1, dmu in 0.001f64..0.1,
        ) {
            let base = path_gain_magnitude(f, d, mu, None).unwrap();
            prop_assert!(path_gain_magnitude(f, d + dd, mu, None).unwrap() < base);
            prop_assert!(path_gain_magnitude(f, d, mu + dmu, None).unwrap() < base);
        }
    }
}
