//! Link configuration: every dimension and physical constant of a simulated
//! uplink, with the two shipped profiles.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::GmmAngleParams;
use crate::error::{Error, Result};

/// ADC resolution. `Infinite` disables quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdcBits {
    Finite(u32),
    Infinite,
}

impl fmt::Display for AdcBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdcBits::Finite(b) => write!(f, "{b}"),
            AdcBits::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for AdcBits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "∞" => Ok(AdcBits::Infinite),
            other => other
                .parse::<u32>()
                .map(AdcBits::Finite)
                .map_err(|_| Error::Parse(format!("ADC bits must be an integer or `inf`, got `{s}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AdcBitsRepr {
    Int(i64),
    Text(String),
}

impl Serialize for AdcBits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AdcBits::Finite(b) => AdcBitsRepr::Int(*b as i64).serialize(s),
            AdcBits::Infinite => AdcBitsRepr::Text("infinite".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for AdcBits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match AdcBitsRepr::deserialize(d)? {
            AdcBitsRepr::Int(b) if b >= 0 && b <= u32::MAX as i64 => Ok(AdcBits::Finite(b as u32)),
            AdcBitsRepr::Int(b) => Err(serde::de::Error::custom(format!("invalid ADC bits {b}"))),
            AdcBitsRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Transmit pulse-shaping filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Psf {
    /// Root raised cosine, truncated to +/-4 symbols and energy-normalized on
    /// a grid of `upsampling` samples per symbol.
    Rrc { roll_off: f64, upsampling: u32 },
    /// Ideal one-sample rectangular tap.
    Rect,
}

impl Psf {
    pub const TABLE_RRC: Psf = Psf::Rrc { roll_off: 0.80, upsampling: 20 };
}

/// How path directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleModel {
    /// GMM draws used as-is.
    Continuous,
    /// GMM draws snapped to the nearest dictionary grid sine.
    OnGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Full-size array and grid parameters.
    Paper,
    /// Small arrays for CI-scale Monte-Carlo runs.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Parse(format!("unknown profile `{other}` (expected paper|desk)"))),
        }
    }
}

impl Profile {
    pub fn config(self) -> SystemConfig {
        match self {
            Profile::Paper => SystemConfig::paper(),
            Profile::Desk => SystemConfig::desk(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas.
    pub n_bs: usize,
    /// Antennas per user terminal.
    pub n_u: usize,
    pub num_users: usize,
    pub n_rf_bs: usize,
    pub n_rf_u: usize,
    /// Streams per user.
    pub n_s_u: usize,
    pub num_subcarriers: usize,
    pub num_pilot_vectors: usize,
    pub num_blocks: usize,
    pub num_taps: usize,
    /// Hz
    pub carrier_freq: f64,
    /// Hz
    pub bandwidth: f64,
    pub grid_bs: usize,
    pub grid_tu: usize,
    pub adc_bits: AdcBits,
    pub pilot_power: f64,
    pub noise_power: f64,
    pub psf: Psf,
    /// True-time-delay elements per RF chain.
    pub tds_per_chain: usize,
    /// Step (s) to which TTD delays are rounded; `None` keeps them continuous.
    pub delay_resolution: Option<f64>,
    /// Phase-shifter resolution of the training beamformers.
    pub phase_bits: u32,
    /// Molecular absorption coefficient (1/m).
    pub absorption_coeff: f64,
    /// Optional `frequency_hz mu_abs` table overriding `absorption_coeff`.
    pub absorption_table: Option<String>,
    /// Optional material table overriding the built-in one.
    pub materials_table: Option<String>,
    /// LoS distance (m).
    pub distance: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub num_nlos: usize,
    pub num_rays: usize,
    pub angle_model: AngleModel,
    /// Scale each user's channel to unit mean entry power.
    pub normalize_channel: bool,
    pub aoa_gmm: GmmAngleParams,
    pub aod_gmm: GmmAngleParams,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl SystemConfig {
    /// Full-size hybrid transceiver parameters.
    pub fn paper() -> Self {
        SystemConfig {
            n_bs: 64,
            n_u: 4,
            num_users: 3,
            n_rf_bs: 8,
            n_rf_u: 2,
            n_s_u: 2,
            num_subcarriers: 128,
            num_pilot_vectors: 123,
            num_blocks: 20,
            num_taps: 6,
            carrier_freq: 0.65e12,
            bandwidth: 5e9,
            grid_bs: 128,
            grid_tu: 8,
            adc_bits: AdcBits::Finite(3),
            pilot_power: 1.0,
            noise_power: 1.0,
            psf: Psf::TABLE_RRC,
            tds_per_chain: 2,
            delay_resolution: None,
            phase_bits: 4,
            absorption_coeff: 0.015,
            absorption_table: None,
            materials_table: None,
            distance: 15.0,
            tx_gain_dbi: 8.0,
            rx_gain_dbi: 28.0,
            num_nlos: 3,
            num_rays: 1,
            angle_model: AngleModel::Continuous,
            normalize_channel: true,
            aoa_gmm: GmmAngleParams::table_aoa(),
            aod_gmm: GmmAngleParams::table_aod(),
            seed: 0,
        }
    }

    /// Reduced arrays and grids with on-grid paths.
    pub fn desk() -> Self {
        SystemConfig {
            n_bs: 16,
            n_u: 2,
            num_users: 2,
            n_rf_bs: 4,
            n_rf_u: 1,
            n_s_u: 1,
            num_subcarriers: 16,
            num_pilot_vectors: 13,
            num_blocks: 10,
            num_taps: 4,
            grid_bs: 32,
            grid_tu: 4,
            angle_model: AngleModel::OnGrid,
            ..Self::paper()
        }
    }

    /// Total streams `N_s`.
    pub fn n_s(&self) -> usize {
        self.n_s_u * self.num_users
    }

    /// Total transmit antennas `N_T`.
    pub fn n_t(&self) -> usize {
        self.n_u * self.num_users
    }

    /// Total transmit grid `G_T`.
    pub fn grid_t(&self) -> usize {
        self.grid_tu * self.num_users
    }

    /// Beamspace dimension `G_BS * G_T`.
    pub fn beamspace_dim(&self) -> usize {
        self.grid_bs * self.grid_t()
    }

    /// Rows of the stacked observation `M * N_s`.
    pub fn observation_dim(&self) -> usize {
        self.num_blocks * self.n_s()
    }

    /// Sampling period `T_s = 1/B`.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// Carrier period `T_c = 1/f_c`.
    pub fn carrier_period(&self) -> f64 {
        1.0 / self.carrier_freq
    }

    /// Phase shifters per TTD element `P = N_BS / S`.
    pub fn ps_per_td(&self) -> usize {
        self.n_bs / self.tds_per_chain.max(1)
    }

    /// RF chains (and AoA bins) assigned to each user at the BS.
    pub fn rf_chains_per_user(&self) -> usize {
        self.n_rf_bs / self.num_users.max(1)
    }

    /// SNR convention `10 log10(1 / sigma_n^2)`.
    pub fn snr_db(&self) -> f64 {
        -10.0 * self.noise_power.log10()
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_power = 10f64.powf(-snr_db / 10.0);
        self
    }

    /// Check every structural relation; the error names the violated one.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let positive = [
            ("n_bs", self.n_bs),
            ("n_u", self.n_u),
            ("num_users", self.num_users),
            ("n_rf_bs", self.n_rf_bs),
            ("n_rf_u", self.n_rf_u),
            ("n_s_u", self.n_s_u),
            ("num_subcarriers", self.num_subcarriers),
            ("num_pilot_vectors", self.num_pilot_vectors),
            ("num_blocks", self.num_blocks),
            ("num_taps", self.num_taps),
            ("grid_bs", self.grid_bs),
            ("grid_tu", self.grid_tu),
            ("tds_per_chain", self.tds_per_chain),
            ("num_rays", self.num_rays),
        ];
        for (name, v) in positive {
            if v == 0 {
                bad.push(format!("{name} >= 1"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::config(format!("violated: {}", bad.join("; "))));
        }
        if self.num_subcarriers != self.num_pilot_vectors + self.num_taps - 1 {
            bad.push(format!(
                "zero-padded block length K = P + D - 1 ({} != {} + {} - 1)",
                self.num_subcarriers, self.num_pilot_vectors, self.num_taps
            ));
        }
        let rf_u_total = self.n_rf_u * self.num_users;
        if self.n_s() > rf_u_total {
            bad.push(format!("N_s <= sum_u N_RF^u ({} > {})", self.n_s(), rf_u_total));
        }
        if rf_u_total > self.n_rf_bs {
            bad.push(format!("sum_u N_RF^u <= N_RF^B ({} > {})", rf_u_total, self.n_rf_bs));
        }
        if self.n_rf_bs > self.n_bs {
            bad.push(format!("N_RF^B <= N_BS ({} > {})", self.n_rf_bs, self.n_bs));
        }
        if self.n_s_u > self.n_rf_u {
            bad.push(format!("N_s,u <= N_RF^u ({} > {})", self.n_s_u, self.n_rf_u));
        }
        if self.n_rf_u > self.n_u {
            bad.push(format!("N_RF^u <= N_u ({} > {})", self.n_rf_u, self.n_u));
        }
        if self.grid_tu < 2 * self.n_u {
            bad.push(format!("G_Tu >= 2 N_u ({} < {})", self.grid_tu, 2 * self.n_u));
        }
        if self.grid_bs < 2 * self.n_bs {
            bad.push(format!("G_BS >= 2 N_BS ({} < {})", self.grid_bs, 2 * self.n_bs));
        }
        if self.n_bs % self.tds_per_chain != 0 {
            bad.push(format!(
                "N_BS divisible by S ({} % {} != 0)",
                self.n_bs, self.tds_per_chain
            ));
        }
        if self.rf_chains_per_user() == 0 {
            bad.push(format!(
                "N_RF^B / U >= 1 ({} / {})",
                self.n_rf_bs, self.num_users
            ));
        }
        if self.n_rf_bs < self.n_s() {
            bad.push(format!("N_RF^B >= N_s ({} < {})", self.n_rf_bs, self.n_s()));
        }
        if self.phase_bits == 0 {
            bad.push("N_Q >= 1".into());
        }
        if let AdcBits::Finite(0) = self.adc_bits {
            bad.push("ADC bits >= 1".into());
        }
        let finite_pos = [
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("distance", self.distance),
        ];
        for (name, v) in finite_pos {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{name} > 0"));
            }
        }
        if !(self.bandwidth < 2.0 * self.carrier_freq) {
            bad.push("B < 2 f_c".into());
        }
        if let Some(r) = self.delay_resolution {
            if !(r.is_finite() && r > 0.0) {
                bad.push("delay_resolution > 0".into());
            }
        }
        if !(self.pilot_power.is_finite() && self.pilot_power > 0.0) {
            bad.push("pilot_power > 0".into());
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            bad.push("noise_power >= 0".into());
        }
        if !(self.absorption_coeff.is_finite() && self.absorption_coeff >= 0.0) {
            bad.push("absorption_coeff >= 0".into());
        }
        if let Psf::Rrc { roll_off, upsampling } = self.psf {
            if !(roll_off > 0.0 && roll_off <= 1.0) || upsampling == 0 {
                bad.push("RRC roll-off in (0, 1] and upsampling >= 1".into());
            }
        }
        for (name, g) in [("aoa_gmm", &self.aoa_gmm), ("aod_gmm", &self.aod_gmm)] {
            if let Err(e) = g.validate() {
                bad.push(format!("{name}: {e}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("violated: {}", bad.join("; "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_profiles_are_valid() {
        SystemConfig::paper().validate().unwrap();
        SystemConfig::desk().validate().unwrap();
    }

    #[test]
    fn paper_profile_dimensions() {
        let c = SystemConfig::paper();
        assert_eq!(c.n_s(), 6);
        assert_eq!(c.observation_dim(), 120);
        assert_eq!(c.beamspace_dim(), 128 * 24);
        assert_eq!(c.ps_per_td(), 32);
    }

    #[test]
    fn zero_padding_relation_is_enforced() {
        let mut c = SystemConfig::desk();
        c.num_pilot_vectors += 1;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("K = P + D - 1"), "{msg}");
    }

    #[test]
    fn subarray_partition_is_enforced() {
        let mut c = SystemConfig::desk();
        c.tds_per_chain = 3;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("divisible by S"), "{msg}");
    }

    #[test]
    fn adc_bits_parse() {
        assert_eq!("inf".parse::<AdcBits>().unwrap(), AdcBits::Infinite);
        assert_eq!("3".parse::<AdcBits>().unwrap(), AdcBits::Finite(3));
        assert!("x".parse::<AdcBits>().is_err());
    }

    #[test]
    fn snr_convention() {
        let c = SystemConfig::desk().with_snr_db(10.0);
        assert!((c.noise_power - 0.1).abs() < 1e-15);
        assert!((c.snr_db() - 10.0).abs() < 1e-12);
    }
}
