//! Repeated-trial experiments.
//!
//! Per-trial work is spread over a dedicated thread pool. Everything summed
//! in parallel is an integer count, and floating-point reductions run in
//! trial order afterwards, so results do not depend on the lane count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::estimate::{estimate_from_counts, mse, SupportCounts};
use super::rng::user_rng;
use super::sampler::{Sampler, SamplerOptions};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;

/// Users handled per parallel work item.
const USER_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub parallel_lanes: usize,
}

impl TrialConfig {
    pub fn new(trials: usize, master_seed: u64, parallel_lanes: usize) -> Result<Self> {
        let c = TrialConfig {
            trials,
            master_seed,
            parallel_lanes,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.parallel_lanes == 0 {
            return Err(Error::InvalidConfig("parallel_lanes must be positive".into()));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        self.validate()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallel_lanes)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsrEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseResult {
    pub spec: MechanismSpec,
    pub mean: f64,
    /// Across-trial sample variance of the per-trial MSE.
    pub variance: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
    pub trials: usize,
}

fn check_domain(spec: &MechanismSpec, dataset: &Dataset) -> Result<()> {
    if spec.k() != dataset.domain_size() {
        return Err(Error::DimensionMismatch(format!(
            "spec has k = {}, dataset has {}",
            spec.k(),
            dataset.domain_size()
        )));
    }
    Ok(())
}

/// Fraction of users whose value the posterior-max attack recovers, over
/// all users and trials.
pub fn empirical_asr(spec: &MechanismSpec, dataset: &Dataset, config: &TrialConfig) -> Result<AsrEstimate> {
    empirical_asr_with(&Sampler::new(spec), dataset, config)
}

pub fn empirical_asr_with(sampler: &Sampler, dataset: &Dataset, config: &TrialConfig) -> Result<AsrEstimate> {
    check_domain(sampler.spec(), dataset)?;
    let pool = config.pool()?;
    let values = dataset.values();
    let seed = config.master_seed;
    let per_trial: Vec<u64> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                values
                    .par_chunks(USER_CHUNK)
                    .enumerate()
                    .map(|(c, chunk)| {
                        chunk
                            .iter()
                            .enumerate()
                            .filter(|&(i, &x)| {
                                let user = (c * USER_CHUNK + i) as u64;
                                let mut rng = user_rng(seed, t as u64, user);
                                let report = sampler.perturb(x, &mut rng).expect("dataset values are in range");
                                sampler.reconstruct(&report, &mut rng).expect("report matches its spec") == x
                            })
                            .count() as u64
                    })
                    .sum()
            })
            .collect()
    });
    let samples = (values.len() * config.trials) as u64;
    let hits: u64 = per_trial.iter().sum();
    let mean = hits as f64 / samples as f64;
    Ok(AsrEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
        samples,
    })
}

/// Support counts of one simulated collection round.
fn collect_counts(sampler: &Sampler, values: &[usize], seed: u64, trial: u64) -> SupportCounts {
    let k = sampler.spec().k();
    values
        .par_chunks(USER_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut counts = SupportCounts::new(k);
            for (i, &x) in chunk.iter().enumerate() {
                let mut rng = user_rng(seed, trial, (c * USER_CHUNK + i) as u64);
                let report = sampler.perturb(x, &mut rng).expect("dataset values are in range");
                counts.add(sampler, &report).expect("report matches its spec");
            }
            counts
        })
        .reduce(|| SupportCounts::new(k), |a, b| a.merge(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MseOptions {
    /// Project each estimate onto the probability simplex before scoring.
    pub project: bool,
    pub sampler: SamplerOptions,
}

/// MSE of the unbiased frequency estimator against the dataset's empirical
/// frequencies, per spec.
pub fn mse_experiment(specs: &[MechanismSpec], dataset: &Dataset, config: &TrialConfig) -> Result<Vec<MseResult>> {
    mse_experiment_with(specs, dataset, config, MseOptions::default())
}

pub fn mse_experiment_with(
    specs: &[MechanismSpec],
    dataset: &Dataset,
    config: &TrialConfig,
    options: MseOptions,
) -> Result<Vec<MseResult>> {
    let pool = config.pool()?;
    let truth = dataset.frequencies();
    specs
        .iter()
        .map(|spec| {
            check_domain(spec, dataset)?;
            let sampler = Sampler::with_options(spec, options.sampler);
            let per_trial: Vec<Result<f64>> = pool.install(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|t| {
                        let counts = collect_counts(&sampler, dataset.values(), config.master_seed, t as u64);
                        let est = estimate_from_counts(spec, &counts, options.project)?;
                        Ok(mse(&est, &truth))
                    })
                    .collect()
            });
            let per_trial = per_trial.into_iter().collect::<Result<Vec<f64>>>()?;
            let t = per_trial.len() as f64;
            let mean = per_trial.iter().sum::<f64>() / t;
            let variance = if per_trial.len() > 1 {
                per_trial.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            Ok(MseResult {
                spec: spec.clone(),
                mean,
                variance,
                std_error: (variance / t).sqrt(),
                trials: per_trial.len(),
            })
        })
        .collect()
}
