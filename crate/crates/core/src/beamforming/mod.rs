//! True-time-delay hybrid combining from estimated angular support, and the
//! link metrics used to score it.

mod combiner;
mod gain;
mod link;

pub use combiner::{
    analog_column, build_flat_hybrid_combiner, build_ttd_hybrid_combiner, optimal_digital_baseline,
    optimal_digital_link, user_precoders, HybridLink, TtdBeamformer,
};
pub use gain::{
    dirichlet_kernel, factorized_array_gain, gain_profile, min_td_elements, normalized_array_gain,
    quantize_delays, steering_combiner, ttd_delays, ttd_rotation, write_gain_profile_csv, GainSample,
    TtdCompensation,
};
pub(crate) use combiner::hcat;
pub(crate) use gain::csv_err;
pub use link::{
    ber_simulation, ber_trial, link_model, link_spectral_efficiency, psk8_detect, psk8_gray, psk8_point,
    spectral_efficiency, BitErrors, LinkModel,
};
