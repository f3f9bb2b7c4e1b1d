//! Seeded Monte-Carlo sweeps over the whole signal chain and their CSV
//! result tables.
//!
//! Trial `t` draws its channel, pilot frame, noise and data from substreams
//! keyed by `(seed, t, lane)`, so any trial replays on its own and the table
//! is a pure function of the spec.

mod run;
mod spec;
mod table;

pub use run::{gain_design, gain_profiles, run_estimator, run_experiment, run_trial, run_trials, Sample};
pub use spec::{
    parse_adc_list, parse_config, parse_config_str, parse_snr_range, AdcModelName, BeamformerKind, ConfigDocument,
    EstimatorKind, ExperimentKind, ExperimentSpec,
};
pub use table::{
    mean_stderr, read_results, read_results_csv, write_results, write_results_csv, ResultRow, ResultTable, RESULTS_HEADER,
};
