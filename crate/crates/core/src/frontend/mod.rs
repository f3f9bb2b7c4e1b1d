//! Training-phase front end: zero-padded pilot blocks through random-phase
//! hybrid beamformers and low-resolution ADCs, and the resulting stacked
//! sensing model.

mod beamformer;
mod convolve;
mod dictionary;
mod pilots;
mod quantize;

pub use beamformer::random_phase_beamformer;
pub use convolve::circular_convolve;
pub use dictionary::{build_dictionary, Dictionaries};
pub use pilots::{
    quantized_noise_covariance, simulate_received_pilots, AdcModel, BlockCovariance, PilotFrame, PilotObservation,
};
pub use quantize::{midrise, quantization_params, QuantizationParams};
