//! Per-user perturbation and the posterior-max reconstruction attack.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rng::{laplace, unit_f64};
use crate::error::{Error, Result};
use crate::mechanisms::{analytic_params, AnalyticParams, MechanismSpec, Protocol};

/// Largest domain for which LH hash functions are stored as value tables.
pub const DEFAULT_HASH_TABLE_CAP: usize = 1 << 20;

/// A uniformly random function `[k] → [g]`.
///
/// Small domains store the function as a table of `k` independent uniform
/// values. Larger domains store a 64-bit seed; `h(x)` is then the first
/// `gen_range(0..g)` draw of the ChaCha8 stream `x` under that seed, so
/// distinct points are again independent and uniform. Both forms realise the
/// complete function family rather than a universal hash family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LhHash {
    Table { values: Vec<usize>, g: usize },
    Seeded { seed: u64, k: usize, g: usize },
}

impl LhHash {
    pub fn eval(&self, x: usize) -> usize {
        match self {
            LhHash::Table { values, .. } => values[x],
            LhHash::Seeded { seed, g, .. } => seeded_value(*seed, x, *g),
        }
    }

    pub fn domain(&self) -> usize {
        match self {
            LhHash::Table { values, .. } => values.len(),
            LhHash::Seeded { k, .. } => *k,
        }
    }

    pub fn range(&self) -> usize {
        match self {
            LhHash::Table { g, .. } | LhHash::Seeded { g, .. } => *g,
        }
    }
}

fn seeded_value(seed: u64, x: usize, g: usize) -> usize {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(x as u64);
    r.gen_range(0..g)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Report {
    /// GRR: the reported value.
    Value(usize),
    /// SS: the reported subset, sorted.
    Subset(Vec<usize>),
    /// LH: the sampled hash function and the perturbed hash value.
    Hashed { hash: LhHash, value: usize },
    /// SUE, OUE, THE: one bit per domain value.
    Bits(Vec<bool>),
}

/// How THE reports are drawn. Both give the same distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheSampling {
    /// Add Laplace(2/ε) noise to each one-hot coordinate and threshold at θ.
    #[default]
    Laplace,
    /// Draw each bit directly from its Bernoulli(p or q) law.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub the_sampling: TheSampling,
    pub hash_table_cap: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            the_sampling: TheSampling::default(),
            hash_table_cap: DEFAULT_HASH_TABLE_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sampler {
    spec: MechanismSpec,
    params: AnalyticParams,
    options: SamplerOptions,
}

fn pick<R: Rng + ?Sized>(rng: &mut R, from: &[usize]) -> usize {
    from[rng.gen_range(0..from.len())]
}

impl Sampler {
    pub fn new(spec: &MechanismSpec) -> Self {
        Self::with_options(spec, SamplerOptions::default())
    }

    pub fn with_options(spec: &MechanismSpec, options: SamplerOptions) -> Self {
        Sampler {
            spec: spec.clone(),
            params: analytic_params(spec),
            options,
        }
    }

    pub fn spec(&self) -> &MechanismSpec {
        &self.spec
    }

    fn k(&self) -> usize {
        self.spec.k()
    }

    fn g(&self) -> usize {
        self.spec.g().unwrap_or(2)
    }

    /// Whether reports carry any information about the input.
    fn informative(&self) -> bool {
        self.spec.epsilon() > 0.0
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> Result<Report> {
        let k = self.k();
        if value >= k {
            return Err(Error::ValueOutOfRange { value, k });
        }
        let p = self.params.p;
        let report = match self.spec.protocol() {
            Protocol::Grr => Report::Value(randomized_response(value, k, p, rng)),
            Protocol::Ss => {
                let omega = self.spec.omega().expect("SS spec carries omega");
                let include = unit_f64(rng) < p;
                let others = if include { omega - 1 } else { omega };
                let mut subset: Vec<usize> = sample(rng, k - 1, others)
                    .into_iter()
                    .map(|i| if i >= value { i + 1 } else { i })
                    .collect();
                if include {
                    subset.push(value);
                }
                subset.sort_unstable();
                Report::Subset(subset)
            }
            Protocol::Blh | Protocol::Olh => {
                let g = self.g();
                let hash = if k <= self.options.hash_table_cap {
                    LhHash::Table {
                        values: (0..k).map(|_| rng.gen_range(0..g)).collect(),
                        g,
                    }
                } else {
                    LhHash::Seeded { seed: rng.next_u64(), k, g }
                };
                let encoded = hash.eval(value);
                let value = randomized_response(encoded, g, p, rng);
                Report::Hashed { hash, value }
            }
            Protocol::Sue | Protocol::Oue => Report::Bits(self.bernoulli_bits(value, rng)),
            Protocol::The => match self.options.the_sampling {
                TheSampling::Bernoulli => Report::Bits(self.bernoulli_bits(value, rng)),
                TheSampling::Laplace => Report::Bits(self.laplace_bits(value, rng)),
            },
        };
        Ok(report)
    }

    fn bernoulli_bits<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> Vec<bool> {
        let AnalyticParams { p, q, .. } = self.params;
        (0..self.k())
            .map(|i| unit_f64(rng) < if i == value { p } else { q })
            .collect()
    }

    fn laplace_bits<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> Vec<bool> {
        let eps = self.spec.epsilon();
        if eps == 0.0 {
            // Infinite noise: every bit is a fair coin.
            return (0..self.k()).map(|_| unit_f64(rng) < 0.5).collect();
        }
        let theta = self.spec.theta().expect("THE spec carries theta");
        let scale = 2.0 / eps;
        (0..self.k())
            .map(|i| {
                let x = if i == value { 1.0 } else { 0.0 };
                x + laplace(rng, scale) > theta
            })
            .collect()
    }

    fn check_shape(&self, report: &Report) -> Result<()> {
        let k = self.k();
        let bad = |why: String| Err(Error::ShapeMismatch(why));
        match (self.spec.protocol(), report) {
            (Protocol::Grr, Report::Value(y)) => {
                if *y >= k {
                    return bad(format!("value {y} outside [0, {k})"));
                }
            }
            (Protocol::Ss, Report::Subset(s)) => {
                let omega = self.spec.omega().unwrap_or(0);
                if s.len() != omega || s.iter().any(|&v| v >= k) || s.windows(2).any(|w| w[0] >= w[1]) {
                    return bad(format!("expected a sorted {omega}-subset of [0, {k})"));
                }
            }
            (Protocol::Blh | Protocol::Olh, Report::Hashed { hash, value }) => {
                let g = self.g();
                if hash.domain() != k || hash.range() != g || *value >= g {
                    return bad(format!("expected a hash [{k}] -> [{g}] and a value below {g}"));
                }
            }
            (Protocol::Sue | Protocol::Oue | Protocol::The, Report::Bits(b)) => {
                if b.len() != k {
                    return bad(format!("expected {k} bits, got {}", b.len()));
                }
            }
            (p, _) => return bad(format!("report kind does not belong to {p}")),
        }
        Ok(())
    }

    /// Calls `f` on every domain value the report supports, in increasing
    /// order.
    pub fn for_each_supported(&self, report: &Report, mut f: impl FnMut(usize)) -> Result<()> {
        self.check_shape(report)?;
        match report {
            Report::Value(y) => f(*y),
            Report::Subset(s) => s.iter().for_each(|&v| f(v)),
            Report::Hashed { hash, value } => (0..self.k()).filter(|&x| hash.eval(x) == *value).for_each(f),
            Report::Bits(b) => b.iter().enumerate().filter(|(_, &set)| set).for_each(|(i, _)| f(i)),
        }
        Ok(())
    }

    /// Posterior-max guess under the uniform prior. Ties are broken
    /// uniformly at random.
    ///
    /// With `ε > 0` the maximisers are exactly the supported values (the
    /// report itself for GRR, the subset for SS, the set bits for the
    /// bitwise protocols, the hash pre-image of the value for LH). If no
    /// value is supported, or `ε = 0`, every input is equally likely.
    pub fn reconstruct<R: Rng + ?Sized>(&self, report: &Report, rng: &mut R) -> Result<usize> {
        let mut support = Vec::new();
        self.for_each_supported(report, |v| support.push(v))?;
        if self.informative() && !support.is_empty() {
            if support.len() == 1 {
                return Ok(support[0]);
            }
            return Ok(pick(rng, &support));
        }
        Ok(rng.gen_range(0..self.k()))
    }
}

/// Keeps `value` with probability `p`, else reports a uniform other value.
fn randomized_response<R: Rng + ?Sized>(value: usize, n: usize, p: f64, rng: &mut R) -> usize {
    if unit_f64(rng) < p {
        value
    } else {
        let other = rng.gen_range(0..n - 1);
        if other >= value {
            other + 1
        } else {
            other
        }
    }
}

pub fn perturb<R: Rng + ?Sized>(spec: &MechanismSpec, value: usize, rng: &mut R) -> Result<Report> {
    Sampler::new(spec).perturb(value, rng)
}

pub fn reconstruct<R: Rng + ?Sized>(spec: &MechanismSpec, report: &Report, rng: &mut R) -> Result<usize> {
    Sampler::new(spec).reconstruct(report, rng)
}
