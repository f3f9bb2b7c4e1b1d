//! Simulation library for uplink multi-user THz hybrid MIMO links.
//!
//! The crate is split along the signal chain:
//!
//! * [`channel`] synthesizes dual-wideband channels (beam squint, spreading and
//!   absorption loss, rough-surface reflections, pulse shaping, GMM angles).
//! * [`frontend`] runs the zero-padded pilot phase through random-phase analog
//!   beamformers and Bussgang-linearized low-resolution ADCs and assembles the
//!   stacked multiple-measurement-vector sensing model.
//! * [`estimation`] recovers the group-sparse beamspace channel with an EM
//!   sparse Bayesian learner, plus least-squares and greedy baselines and the
//!   Bayesian Cramér-Rao bound.
//! * [`beamforming`] designs true-time-delay hybrid combiners from the
//!   recovered angular support and scores them (array gain, spectral
//!   efficiency, bit error rate).
//! * [`experiments`] drives seeded Monte-Carlo sweeps and writes CSV tables.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod frontend;
pub mod linalg;
pub mod rng;
pub mod textio;

pub use config::{AdcBits, AngleModel, Profile, Psf, SystemConfig};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};

/// Speed of light used by every propagation formula (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
