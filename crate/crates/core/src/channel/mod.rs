//! Dual-wideband multi-user channel synthesis.

mod angles;
mod array;
mod generate;
mod propagation;
mod pulse;

pub use angles::{sample_angles_gmm, GmmAngleParams, DEFAULT_CENTER_1, DEFAULT_CENTER_2};
pub use array::{
    array_response, grid_sine, nearest_grid_index, subcarrier_frequencies, subcarrier_frequency,
    subcarrier_frequency_raw,
};
pub use generate::{generate_channel, ChannelEnvironment, ChannelRealization, PathKind, PathParams};
pub use propagation::{
    load_materials, parse_materials, path_gain_magnitude, reflection_coefficient, Absorption, Material, Reflection,
    EPSILON_0, MU_0, Z_0,
};
pub use pulse::{pulse_shaping_coeff, pulse_shaping_coeffs, pulse_taps, pulse_value, RRC_SPAN};
