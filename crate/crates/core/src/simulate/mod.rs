//! Monte-Carlo layer: samplers, reconstruction attacks, estimators and
//! repeated-trial experiments.

mod dataset;
mod estimate;
mod experiment;
pub mod rng;
mod sampler;

pub use dataset::{
    load_dataset, parse_dataset, synth_dataset, zipf_weights, Dataset, DatasetFormat, Distribution, Provenance, Remap,
};
pub use estimate::{estimate_frequencies, estimate_from_counts, mse, project_to_simplex, SupportCounts};
pub use experiment::{
    empirical_asr, empirical_asr_with, mse_experiment, mse_experiment_with, AsrEstimate, MseOptions, MseResult,
    TrialConfig,
};
pub use sampler::{
    perturb, reconstruct, LhHash, Report, Sampler, SamplerOptions, TheSampling, DEFAULT_HASH_TABLE_CAP,
};
