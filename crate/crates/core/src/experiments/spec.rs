use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{AdcBits, Profile, SystemConfig};
use crate::error::{Error, Result};
use crate::frontend::AdcModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NmseVsSnr,
    BerVsSnr,
    SeVsSnr,
    AdcSweep,
    GainProfile,
    PsfCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::NmseVsSnr,
        ExperimentKind::BerVsSnr,
        ExperimentKind::SeVsSnr,
        ExperimentKind::AdcSweep,
        ExperimentKind::GainProfile,
        ExperimentKind::PsfCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NmseVsSnr => "nmse_vs_snr",
            ExperimentKind::BerVsSnr => "ber_vs_snr",
            ExperimentKind::SeVsSnr => "se_vs_snr",
            ExperimentKind::AdcSweep => "adc_sweep",
            ExperimentKind::GainProfile => "gain_profile",
            ExperimentKind::PsfCompare => "psf_compare",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::Parse(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    HbgSr,
    SblPerSubcarrier,
    MmvLs,
    Gsomp,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::HbgSr => "hbg_sr",
            EstimatorKind::SblPerSubcarrier => "sbl_per_subcarrier",
            EstimatorKind::MmvLs => "mmv_ls",
            EstimatorKind::Gsomp => "gsomp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformerKind {
    Ttd,
    Flat,
    OptimalDigital,
}

impl BeamformerKind {
    pub fn name(self) -> &'static str {
        match self {
            BeamformerKind::Ttd => "ttd",
            BeamformerKind::Flat => "flat",
            BeamformerKind::OptimalDigital => "optimal_digital",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcModelName {
    Bussgang,
    MidRise,
}

impl From<AdcModelName> for AdcModel {
    fn from(m: AdcModelName) -> Self {
        match m {
            AdcModelName::Bussgang => AdcModel::Bussgang,
            AdcModelName::MidRise => AdcModel::MidRise,
        }
    }
}

/// What to sweep and how often. `config` is the base link configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub beamformers: Vec<BeamformerKind>,
    /// Resolutions swept by `adc_sweep`.
    pub adc_bits: Vec<AdcBits>,
    pub seed: u64,
    /// EM stopping threshold on the squared hyperparameter change.
    pub em_epsilon: f64,
    pub em_max_iter: usize,
    /// Report the Bayesian bound next to the estimators (on-grid channels).
    pub bound: bool,
    /// GSOMP support size; defaults to the number of planted paths.
    pub gsomp_max_support: Option<usize>,
    /// Data vectors per subcarrier and trial in BER runs.
    pub n_data: usize,
    pub adc_model: AdcModelName,
    /// Direction sine the `gain_profile` beams are steered to (snapped to
    /// the receive grid).
    pub gain_design_sine: f64,
    pub gain_points: usize,
    #[serde(skip)]
    pub config: SystemConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::NmseVsSnr,
            snr_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 100,
            estimators: vec![
                EstimatorKind::HbgSr,
                EstimatorKind::SblPerSubcarrier,
                EstimatorKind::MmvLs,
                EstimatorKind::Gsomp,
            ],
            beamformers: vec![BeamformerKind::Ttd, BeamformerKind::Flat, BeamformerKind::OptimalDigital],
            adc_bits: vec![AdcBits::Finite(1), AdcBits::Finite(2), AdcBits::Finite(3), AdcBits::Infinite],
            seed: 0,
            em_epsilon: 1e-4,
            em_max_iter: 30,
            bound: true,
            gsomp_max_support: None,
            n_data: 100,
            adc_model: AdcModelName::Bussgang,
            gain_design_sine: 0.467,
            gain_points: 201,
            config: SystemConfig::paper(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let field = |f: &str, r: &str| Err(Error::Field { field: format!("experiment.{f}"), reason: r.into() });
        if self.trials == 0 {
            return field("trials", "must be at least 1");
        }
        if self.snr_grid.is_empty() {
            return field("snr_grid", "must not be empty");
        }
        if self.snr_grid.iter().any(|s| !s.is_finite()) {
            return field("snr_grid", "must be finite");
        }
        let needs_estimators = !matches!(self.kind, ExperimentKind::GainProfile);
        if needs_estimators && self.estimators.is_empty() {
            return field("estimators", "must not be empty");
        }
        if matches!(self.kind, ExperimentKind::BerVsSnr | ExperimentKind::SeVsSnr) && self.beamformers.is_empty() {
            return field("beamformers", "must not be empty");
        }
        if self.kind == ExperimentKind::AdcSweep && self.adc_bits.is_empty() {
            return field("adc_bits", "must not be empty");
        }
        if self.adc_bits.iter().any(|b| *b == AdcBits::Finite(0)) {
            return field("adc_bits", "resolutions must be at least 1 bit");
        }
        if !(self.em_epsilon.is_finite() && self.em_epsilon >= 0.0) {
            return field("em_epsilon", "must be finite and >= 0");
        }
        if self.em_max_iter == 0 {
            return field("em_max_iter", "must be at least 1");
        }
        if self.n_data == 0 {
            return field("n_data", "must be at least 1");
        }
        if !(-1.0..=1.0).contains(&self.gain_design_sine) {
            return field("gain_design_sine", "must lie in [-1, 1]");
        }
        if self.gain_points < 2 {
            return field("gain_points", "must be at least 2");
        }
        if self.gsomp_max_support == Some(0) {
            return field("gsomp_max_support", "must be at least 1");
        }
        Ok(())
    }

    /// Serialize as a configuration file that [`parse_config_str`] reads back
    /// to the same spec.
    pub fn to_toml(&self) -> Result<String> {
        let mut doc = toml::Table::new();
        doc.insert("system".into(), to_value(&self.config)?);
        doc.insert("experiment".into(), to_value(self)?);
        toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<toml::Value> {
    toml::Value::try_from(v).map_err(|e| Error::Parse(e.to_string()))
}

/// Raw configuration file: an optional base profile, `[system]` overrides and
/// an `[experiment]` section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub profile: Option<Profile>,
    #[serde(default)]
    pub system: toml::Table,
    #[serde(default)]
    pub experiment: toml::Table,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        from_table(value, "")
    }

    /// Apply the overrides on `profile` (or the file's own profile, or the
    /// full-size defaults) and validate.
    pub fn resolve(&self, profile: Option<Profile>) -> Result<(SystemConfig, ExperimentSpec)> {
        let base = profile.or(self.profile).unwrap_or(Profile::Paper).config();
        let mut merged = match to_value(&base)? {
            toml::Value::Table(t) => t,
            _ => unreachable!("config serializes to a table"),
        };
        merge(&mut merged, &self.system);
        let config: SystemConfig = from_table(merged, "system.")?;
        let mut spec: ExperimentSpec = from_table(self.experiment.clone(), "experiment.")?;
        if !self.experiment.contains_key("seed") {
            spec.seed = config.seed;
        }
        spec.config = config.clone();
        spec.validate()?;
        Ok((config, spec))
    }
}

/// Deep merge, except that tagged enums (tables carrying `kind`) are
/// replaced whole.
fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn from_table<T: serde::de::DeserializeOwned>(t: toml::Table, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(toml::Value::Table(t)).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." || path.is_empty() {
            prefix.trim_end_matches('.').to_string()
        } else {
            format!("{prefix}{path}")
        };
        Error::Field { field, reason: e.into_inner().to_string() }
    })
}

pub fn parse_config_str(text: &str) -> Result<(SystemConfig, ExperimentSpec)> {
    ConfigDocument::parse(text)?.resolve(None)
}

/// Read and validate a configuration file; missing keys take the
/// full-size defaults.
pub fn parse_config(path: impl AsRef<Path>) -> Result<(SystemConfig, ExperimentSpec)> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// `"min:step:max"` (inclusive) or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad SNR value `{p}` in `{s}`")));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
            if !(step > 0.0 && step.is_finite() && lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Parse(format!("SNR range `{s}` needs min <= max and step > 0")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| lo + i as f64 * step).collect())
        }
        _ => Err(Error::Parse(format!("SNR range `{s}` must be min:step:max"))),
    }
}

/// Comma-separated ADC resolutions, e.g. `1,2,3,inf`.
pub fn parse_adc_list(s: &str) -> Result<Vec<AdcBits>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}
