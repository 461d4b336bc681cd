//! Unbiased frequency estimation from reports.
//!
//! `f̂_v = (c_v / n - q*) / (p* - q*)`, where `c_v` counts the reports that
//! support `v` and `p*`, `q*` are the probabilities that a report supports
//! the user's own value and a fixed other value.

use super::sampler::{Report, Sampler};
use crate::error::{Error, Result};
use crate::mechanisms::{analytic_params, MechanismSpec};

/// Per-value support counts over a batch of reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCounts {
    pub counts: Vec<u64>,
    pub n: u64,
}

impl SupportCounts {
    pub fn new(k: usize) -> Self {
        SupportCounts {
            counts: vec![0; k],
            n: 0,
        }
    }

    pub fn add(&mut self, sampler: &Sampler, report: &Report) -> Result<()> {
        let counts = &mut self.counts;
        sampler.for_each_supported(report, |v| counts[v] += 1)?;
        self.n += 1;
        Ok(())
    }

    pub fn merge(mut self, other: &SupportCounts) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        self
    }
}

pub fn estimate_from_counts(spec: &MechanismSpec, counts: &SupportCounts, project: bool) -> Result<Vec<f64>> {
    let a = analytic_params(spec);
    let gap = a.p_star - a.q_star;
    if gap.abs() <= 1e-15 {
        return Err(Error::DegenerateEstimator(a.p_star));
    }
    if counts.n == 0 {
        return Err(Error::EmptyDataset);
    }
    if counts.counts.len() != spec.k() {
        return Err(Error::ShapeMismatch(format!(
            "{} counts for a domain of {}",
            counts.counts.len(),
            spec.k()
        )));
    }
    let n = counts.n as f64;
    let est: Vec<f64> = counts
        .counts
        .iter()
        .map(|&c| (c as f64 / n - a.q_star) / gap)
        .collect();
    Ok(if project { project_to_simplex(&est) } else { est })
}

pub fn estimate_frequencies(spec: &MechanismSpec, reports: &[Report], project: bool) -> Result<Vec<f64>> {
    let sampler = Sampler::new(spec);
    let mut counts = SupportCounts::new(spec.k());
    for r in reports {
        counts.add(&sampler, r)?;
    }
    estimate_from_counts(spec, &counts, project)
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// `(1/k) Σ_v (f̂_v - f_v)^2`.
pub fn mse(estimate: &[f64], truth: &[f64]) -> f64 {
    let k = truth.len() as f64;
    estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / k
}
