//! Datasets of secret values over a dense domain `[k]`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::index_labels;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Whitespace-separated integer items per line, flattened in order.
    Transactions,
    /// One integer item per line.
    ValuePerLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Remap {
    /// Every distinct item, in increasing item order.
    Identity,
    /// The `n` most frequent items, ranked by count (ties to the smaller
    /// item); values outside them are dropped.
    TopN { n: usize },
    /// `n` values drawn uniformly without replacement, then remapped as
    /// with `Identity`.
    Subsample { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    /// Rank `r` (from 1) has weight `r^-s`.
    Zipf { s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    File {
        path: String,
        format: DatasetFormat,
        remap: Remap,
    },
    Synthetic {
        distribution: Distribution,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    k: usize,
    values: Vec<usize>,
    /// Original item for each domain index.
    labels: Vec<String>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(k: usize, values: Vec<usize>, labels: Vec<String>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != k {
            return Err(Error::DimensionMismatch(format!("{} labels for a domain of {k}", labels.len())));
        }
        if let Some(&value) = values.iter().find(|&&v| v >= k) {
            return Err(Error::ValueOutOfRange { value, k });
        }
        Ok(Dataset {
            k,
            values,
            labels,
            provenance,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.k];
        for &v in &self.values {
            c[v] += 1;
        }
        c
    }

    /// Empirical frequency of each domain value.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        self.counts().into_iter().map(|c| c as f64 / n).collect()
    }
}

fn parse_error(source: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_owned(),
        line,
        reason: reason.into(),
    }
}

/// Raw items in file order.
fn parse_items(text: &str, source: &str, format: DatasetFormat) -> Result<Vec<u64>> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut tokens = line.split_whitespace().peekable();
        if tokens.peek().is_none() {
            continue;
        }
        let parse = |t: &str| {
            t.parse::<u64>()
                .map_err(|e| parse_error(source, line_no, format!("{t:?}: {e}")))
        };
        match format {
            DatasetFormat::Transactions => {
                for t in tokens {
                    items.push(parse(t)?);
                }
            }
            DatasetFormat::ValuePerLine => {
                let t = tokens.next().expect("peeked");
                if tokens.next().is_some() {
                    return Err(parse_error(source, line_no, "expected one value per line"));
                }
                items.push(parse(t)?);
            }
        }
    }
    Ok(items)
}

fn dense(items: &[u64]) -> (Vec<usize>, Vec<String>) {
    let distinct: BTreeMap<u64, usize> = items.iter().map(|&i| (i, 0)).collect();
    let index: HashMap<u64, usize> = distinct.keys().enumerate().map(|(n, &i)| (i, n)).collect();
    let labels = distinct.keys().map(u64::to_string).collect();
    (items.iter().map(|i| index[i]).collect(), labels)
}

fn apply_remap(items: Vec<u64>, remap: Remap) -> Result<(usize, Vec<usize>, Vec<String>)> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match remap {
        Remap::Identity => {
            let (values, labels) = dense(&items);
            Ok((labels.len(), values, labels))
        }
        Remap::TopN { n } => {
            if n == 0 {
                return Err(Error::InvalidConfig("top_n needs n >= 1".into()));
            }
            let mut freq: HashMap<u64, u64> = HashMap::new();
            for &i in &items {
                *freq.entry(i).or_default() += 1;
            }
            let mut ranked: Vec<(u64, u64)> = freq.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(n);
            let rank: HashMap<u64, usize> = ranked.iter().enumerate().map(|(r, &(i, _))| (i, r)).collect();
            let values: Vec<usize> = items.iter().filter_map(|i| rank.get(i).copied()).collect();
            let labels = ranked.iter().map(|(i, _)| i.to_string()).collect();
            Ok((ranked.len(), values, labels))
        }
        Remap::Subsample { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = sample(&mut rng, items.len(), n.min(items.len())).into_vec();
            picked.sort_unstable();
            let chosen: Vec<u64> = picked.into_iter().map(|i| items[i]).collect();
            if chosen.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let (values, labels) = dense(&chosen);
            Ok((labels.len(), values, labels))
        }
    }
}

/// Parses dataset text; `source` names the input in error messages.
pub fn parse_dataset(text: &str, source: &str, format: DatasetFormat, remap: Remap) -> Result<Dataset> {
    let items = parse_items(text, source, format)?;
    let (k, values, labels) = apply_remap(items, remap)?;
    Dataset::new(
        k,
        values,
        labels,
        Provenance::File {
            path: source.to_owned(),
            format,
            remap,
        },
    )
}

pub fn load_dataset(path: &Path, format: DatasetFormat, remap: Remap) -> Result<Dataset> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(&source, 0, e.to_string()))?;
    parse_dataset(&text, &source, format, remap)
}

/// `n` independent draws from `dist` over `[k]`, reproducible from `seed`.
pub fn synth_dataset(dist: Distribution, k: usize, n: usize, seed: u64) -> Result<Dataset> {
    if k < 2 {
        return Err(Error::InvalidDomainSize(k));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match dist {
        Distribution::Uniform => (0..n).map(|_| rng.gen_range(0..k)).collect(),
        Distribution::Zipf { s } => {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidConfig(format!("zipf exponent must be >= 0, got {s}")));
            }
            let weights: Vec<f64> = zipf_weights(k, s);
            let w = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (0..n).map(|_| w.sample(&mut rng)).collect()
        }
    };
    Dataset::new(
        k,
        values,
        index_labels(k),
        Provenance::Synthetic {
            distribution: dist,
            seed,
        },
    )
}

/// Normalised Zipf probabilities for ranks `1..=k`.
pub fn zipf_weights(k: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=k).map(|r| (r as f64).powf(-s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}
