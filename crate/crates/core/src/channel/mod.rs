//! Row-stochastic channel matrices and the algebra used by every other module.
//!
//! A channel `C` maps a secret `x` to an observable `y` with probability
//! `C[x][y]`. Rows are inputs, columns are outputs. Priors, gain functions and
//! hypers (the outer distribution over outputs together with the posterior
//! each output induces) live here as well.
//!
//! Bit-vector domains produced by [`ChannelMatrix::kronecker_power`] are
//! ordered lexicographically with the most significant bit first, so a 2-bit
//! domain reads `00, 01, 10, 11`.

mod exact;
mod io;

pub use exact::{ratio as exact_ratio, RationalChannel, MAX_EXACT_COLUMNS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for row sums and entry signs.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Default cap on `rows * cols` for explicitly materialized channels.
pub const DEFAULT_SIZE_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<ChannelRepr> for ChannelMatrix {
    type Error = Error;

    fn try_from(repr: ChannelRepr) -> Result<Self> {
        ChannelMatrix::with_labels(repr.entries, repr.input_labels, repr.output_labels)
    }
}

impl From<ChannelMatrix> for ChannelRepr {
    fn from(c: ChannelMatrix) -> Self {
        ChannelRepr {
            entries: c.to_rows(),
            input_labels: c.input_labels,
            output_labels: c.output_labels,
        }
    }
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Checks `rows * cols` against `cap` without overflowing.
pub(crate) fn check_size(rows: u128, cols: u128, cap: usize) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(total) if total <= cap as u128 => Ok(()),
        _ => Err(Error::SizeCapExceeded { rows, cols, cap }),
    }
}

impl ChannelMatrix {
    /// Validates a raw matrix with index labels.
    pub fn new(raw: Vec<Vec<f64>>) -> Result<Self> {
        let rows = raw.len();
        let cols = raw.first().map_or(0, Vec::len);
        Self::with_labels(raw, index_labels(rows), index_labels(cols))
    }

    /// Validates a raw matrix. Entries are kept bit-for-bit; nothing is
    /// renormalized, so a loaded channel serializes back to the same bytes.
    pub fn with_labels(
        raw: Vec<Vec<f64>>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let rows = raw.len();
        if rows == 0 {
            return Err(Error::DimensionMismatch("channel has no rows".into()));
        }
        let cols = raw[0].len();
        if cols == 0 {
            return Err(Error::DimensionMismatch("channel has no columns".into()));
        }
        if let Some((i, r)) = raw.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        let entries: Vec<f64> = raw.into_iter().flatten().collect();
        Self::from_flat(rows, cols, entries, input_labels, output_labels)
    }

    pub(crate) fn from_flat(
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        if input_labels.len() != rows || output_labels.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix with {} input and {} output labels",
                input_labels.len(),
                output_labels.len()
            )));
        }
        debug_assert_eq!(entries.len(), rows * cols);
        for (row, chunk) in entries.chunks(cols).enumerate() {
            let mut sum = 0.0;
            for (col, &v) in chunk.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row, col });
                }
                if v < -STOCHASTIC_TOLERANCE {
                    return Err(Error::NegativeEntry { row, col, value: v });
                }
                sum += v;
            }
            let residual = (sum - 1.0).abs();
            if residual > STOCHASTIC_TOLERANCE {
                return Err(Error::NonStochasticRow { row, residual });
            }
        }
        Ok(ChannelMatrix {
            rows,
            cols,
            entries,
            input_labels,
            output_labels,
        })
    }

    /// Validates and then renormalizes each row, clamping round-off negatives
    /// to zero. Used for builder outputs and products, where the residual is
    /// float noise.
    pub(crate) fn normalized(
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let mut c = Self::from_flat(rows, cols, entries, input_labels, output_labels)?;
        for chunk in c.entries.chunks_mut(cols) {
            for v in chunk.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = chunk.iter().sum();
            if sum != 1.0 {
                chunk.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(c)
    }

    /// The `n x n` identity channel.
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        ChannelMatrix {
            rows: n,
            cols: n,
            entries,
            input_labels: index_labels(n),
            output_labels: index_labels(n),
        }
    }

    /// A channel whose rows all equal `row`; it leaks nothing.
    pub fn constant(rows: usize, row: &[f64]) -> Result<Self> {
        Self::new(vec![row.to_vec(); rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.cols..(x + 1) * self.cols]
    }

    pub fn column(&self, y: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |x| self.get(x, y))
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn relabel(mut self, input_labels: Vec<String>, output_labels: Vec<String>) -> Result<Self> {
        if input_labels.len() != self.rows || output_labels.len() != self.cols {
            return Err(Error::DimensionMismatch("label counts do not match".into()));
        }
        self.input_labels = input_labels;
        self.output_labels = output_labels;
        Ok(self)
    }

    /// Largest absolute entrywise difference; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &ChannelMatrix) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Post-processing `self` by `next`: the matrix product `self · next`.
    pub fn cascade(&self, next: &ChannelMatrix) -> Result<ChannelMatrix> {
        if self.cols != next.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot cascade {}x{} into {}x{}",
                self.rows, self.cols, next.rows, next.cols
            )));
        }
        let entries = matmul(&self.entries, self.rows, self.cols, &next.entries, next.cols);
        ChannelMatrix::normalized(
            self.rows,
            next.cols,
            entries,
            self.input_labels.clone(),
            next.output_labels.clone(),
        )
    }

    /// Parallel composition: input `(a, b)` sits at row `a * other.rows + b`.
    /// Labels are concatenated, left factor first.
    pub fn kronecker(&self, other: &ChannelMatrix, cap: usize) -> Result<ChannelMatrix> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        check_size(rows as u128, cols as u128, cap)?;
        let mut entries = Vec::with_capacity(rows * cols);
        for a in 0..self.rows {
            for b in 0..other.rows {
                for ya in 0..self.cols {
                    let pa = self.get(a, ya);
                    entries.extend(other.row(b).iter().map(|pb| pa * pb));
                }
            }
        }
        let concat = |l: &[String], r: &[String]| -> Vec<String> {
            l.iter()
                .flat_map(|a| r.iter().map(move |b| format!("{a}{b}")))
                .collect()
        };
        ChannelMatrix::normalized(
            rows,
            cols,
            entries,
            concat(&self.input_labels, &other.input_labels),
            concat(&self.output_labels, &other.output_labels),
        )
    }

    /// `k`-fold Kronecker power. For a bitwise channel labelled `0`/`1` the
    /// result acts on `k`-bit strings, MSB first.
    pub fn kronecker_power(&self, k: u32, cap: usize) -> Result<ChannelMatrix> {
        if k == 0 {
            return Err(Error::InvalidConfig("kronecker power needs k >= 1".into()));
        }
        let rows = (self.rows as u128).checked_pow(k);
        let cols = (self.cols as u128).checked_pow(k);
        match (rows, cols) {
            (Some(r), Some(c)) => check_size(r, c, cap)?,
            _ => {
                return Err(Error::SizeCapExceeded {
                    rows: rows.unwrap_or(u128::MAX),
                    cols: cols.unwrap_or(u128::MAX),
                    cap,
                })
            }
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.kronecker(self, cap)?;
        }
        Ok(acc)
    }

    /// Keeps only the rows of one-hot inputs of a channel on `k`-bit vectors.
    /// Row `i` of the result is the vector with bit `i` set counting from the
    /// left, so `10…0` comes first and `0…01` last.
    pub fn restrict_to_one_hot(&self) -> Result<ChannelMatrix> {
        if !self.rows.is_power_of_two() || self.rows < 4 {
            return Err(Error::NotPowerOfTwoRows(self.rows));
        }
        let k = self.rows.trailing_zeros() as usize;
        let keep: Vec<usize> = (0..k).map(|i| 1usize << (k - 1 - i)).collect();
        let mut entries = Vec::with_capacity(k * self.cols);
        for &r in &keep {
            entries.extend_from_slice(self.row(r));
        }
        let labels = keep.iter().map(|&r| self.input_labels[r].clone()).collect();
        ChannelMatrix::from_flat(k, self.cols, entries, labels, self.output_labels.clone())
    }
}

pub(crate) fn matmul(a: &[f64], n: usize, m: usize, b: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let out_row = &mut out[i * p..(i + 1) * p];
        for l in 0..m {
            let av = a[i * m + l];
            if av == 0.0 {
                continue;
            }
            for (o, bv) in out_row.iter_mut().zip(&b[l * p..(l + 1) * p]) {
                *o += av * bv;
            }
        }
    }
    out
}

/// A probability distribution over the secrets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Prior {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Prior {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Prior::new(weights)
    }
}

impl From<Prior> for Vec<f64> {
    fn from(p: Prior) -> Self {
        p.weights
    }
}

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch("prior is empty".into()));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteEntry { row: 0, col: i });
            }
            if w < -STOCHASTIC_TOLERANCE {
                return Err(Error::NegativeEntry { row: 0, col: i, value: w });
            }
            sum += w;
        }
        let residual = (sum - 1.0).abs();
        if residual > STOCHASTIC_TOLERANCE {
            return Err(Error::NonStochasticRow { row: 0, residual });
        }
        Ok(Prior { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Prior {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        Prior { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Payoffs `g(w, x)` for an adversary taking action `w` when the secret is `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainFunction {
    actions: usize,
    secrets: usize,
    gains: Vec<f64>,
}

impl GainFunction {
    /// Rows are actions, columns are secrets.
    pub fn new(gains: Vec<Vec<f64>>) -> Result<Self> {
        let actions = gains.len();
        if actions == 0 {
            return Err(Error::DimensionMismatch("gain function has no actions".into()));
        }
        let secrets = gains[0].len();
        if secrets == 0 || gains.iter().any(|r| r.len() != secrets) {
            return Err(Error::DimensionMismatch("gain matrix is not rectangular".into()));
        }
        let gains: Vec<f64> = gains.into_iter().flatten().collect();
        if let Some(i) = gains.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: i / secrets,
                col: i % secrets,
            });
        }
        Ok(GainFunction {
            actions,
            secrets,
            gains,
        })
    }

    /// The identity gain: one point for guessing the secret exactly.
    pub fn bayes(n: usize) -> Self {
        let mut gains = vec![0.0; n * n];
        for i in 0..n {
            gains[i * n + i] = 1.0;
        }
        GainFunction {
            actions: n,
            secrets: n,
            gains,
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn secrets(&self) -> usize {
        self.secrets
    }

    #[inline]
    pub fn gain(&self, w: usize, x: usize) -> f64 {
        self.gains[w * self.secrets + x]
    }
}

/// The distribution on posteriors induced by pushing a prior through a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    /// Marginal probability of each retained output.
    pub outer: Vec<f64>,
    /// Posterior over inputs for each retained output.
    pub posteriors: Vec<Vec<f64>>,
    /// Column index in the source channel of each retained output.
    pub outputs: Vec<usize>,
}

impl Hyper {
    /// `Σ_y outer_y · posterior_y`, which must reproduce the prior.
    pub fn expected_posterior(&self) -> Vec<f64> {
        let n = self.posteriors.first().map_or(0, Vec::len);
        let mut acc = vec![0.0; n];
        for (o, post) in self.outer.iter().zip(&self.posteriors) {
            for (a, p) in acc.iter_mut().zip(post) {
                *a += o * p;
            }
        }
        acc
    }
}

/// Joint `π_x C[x][y]`, normalized per column. Outputs with zero marginal
/// are dropped.
pub fn posterior_hyper(prior: &Prior, channel: &ChannelMatrix) -> Result<Hyper> {
    if prior.len() != channel.rows() {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries, channel has {} rows",
            prior.len(),
            channel.rows()
        )));
    }
    let mut hyper = Hyper {
        outer: Vec::new(),
        posteriors: Vec::new(),
        outputs: Vec::new(),
    };
    for y in 0..channel.cols() {
        let joint: Vec<f64> = prior
            .weights()
            .iter()
            .enumerate()
            .map(|(x, p)| p * channel.get(x, y))
            .collect();
        let marginal: f64 = joint.iter().sum();
        if marginal <= 0.0 {
            continue;
        }
        hyper.outer.push(marginal);
        hyper.posteriors.push(joint.into_iter().map(|j| j / marginal).collect());
        hyper.outputs.push(y);
    }
    Ok(hyper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grr3_ln2() -> ChannelMatrix {
        ChannelMatrix::new(vec![
            vec![0.5, 0.25, 0.25],
            vec![0.25, 0.5, 0.25],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn identity_is_valid() {
        let c = ChannelMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(c, ChannelMatrix::identity(2));
    }

    #[test]
    fn short_row_is_rejected() {
        let err = ChannelMatrix::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap_err();
        match err {
            Error::NonStochasticRow { row, residual } => {
                assert_eq!(row, 0);
                assert!((residual - 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_and_ragged_inputs_are_rejected() {
        assert!(matches!(
            ChannelMatrix::new(vec![vec![1.5, -0.5]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            ChannelMatrix::new(vec![vec![1.0], vec![0.5, 0.5]]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(ChannelMatrix::new(vec![]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(
            ChannelMatrix::new(vec![vec![f64::NAN, 1.0]]),
            Err(Error::NonFiniteEntry { .. })
        ));
    }

    #[test]
    fn grr_example_is_valid() {
        assert_eq!(grr3_ln2().rows(), 3);
    }

    #[test]
    fn cascade_with_identity_is_noop() {
        let c = grr3_ln2();
        let out = c.cascade(&ChannelMatrix::identity(3)).unwrap();
        assert_eq!(out.max_abs_diff(&c), Some(0.0));
        assert!(c.cascade(&ChannelMatrix::identity(2)).is_err());
    }

    #[test]
    fn cascade_of_binary_rr_matches_hand_product() {
        // RR at ln 2 has p = 2/3, at ln 3 has p = 3/4.
        let a = ChannelMatrix::new(vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]]).unwrap();
        let b = ChannelMatrix::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let c = a.cascade(&b).unwrap();
        let diag = 2.0 / 3.0 * 0.75 + 1.0 / 3.0 * 0.25;
        let off = 2.0 / 3.0 * 0.25 + 1.0 / 3.0 * 0.75;
        assert!((c.get(0, 0) - diag).abs() < 1e-15);
        assert!((c.get(0, 1) - off).abs() < 1e-15);
        assert!((c.get(1, 0) - off).abs() < 1e-15);
        assert!((c.get(1, 1) - diag).abs() < 1e-15);
    }

    #[test]
    fn kronecker_power_one_is_identity_op() {
        let b = ChannelMatrix::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        assert_eq!(b.kronecker_power(1, DEFAULT_SIZE_CAP).unwrap(), b);
    }

    #[test]
    fn kronecker_power_labels_are_msb_first() {
        let b = ChannelMatrix::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let b2 = b.kronecker_power(2, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(b2.input_labels(), &["00", "01", "10", "11"]);
        assert_eq!(b2.output_labels(), &["00", "01", "10", "11"]);
        // input 01 -> output 10: first bit 0->1 (0.3), second bit 1->0 (0.2)
        assert!((b2.get(1, 2) - 0.3 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn kronecker_power_respects_cap() {
        let b = ChannelMatrix::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        assert!(matches!(
            b.kronecker_power(12, DEFAULT_SIZE_CAP),
            Err(Error::SizeCapExceeded { .. })
        ));
        assert!(matches!(
            b.kronecker_power(200, DEFAULT_SIZE_CAP),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn one_hot_restriction_order() {
        let b = ChannelMatrix::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let hot = b.kronecker_power(3, DEFAULT_SIZE_CAP).unwrap().restrict_to_one_hot().unwrap();
        assert_eq!(hot.input_labels(), &["100", "010", "001"]);
        assert_eq!(hot.cols(), 8);
        assert!(matches!(
            ChannelMatrix::identity(3).restrict_to_one_hot(),
            Err(Error::NotPowerOfTwoRows(3))
        ));
        assert!(matches!(
            ChannelMatrix::identity(2).restrict_to_one_hot(),
            Err(Error::NotPowerOfTwoRows(2))
        ));
    }

    #[test]
    fn point_prior_merges_outputs() {
        let h = posterior_hyper(&Prior::point(3, 1), &grr3_ln2()).unwrap();
        for post in &h.posteriors {
            assert_eq!(post, &vec![0.0, 1.0, 0.0]);
        }
        assert!((h.outer.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_prior_on_grr_example() {
        let h = posterior_hyper(&Prior::uniform(3), &grr3_ln2()).unwrap();
        assert_eq!(h.outer.len(), 3);
        for (y, (o, post)) in h.outer.iter().zip(&h.posteriors).enumerate() {
            assert!((o - 1.0 / 3.0).abs() < 1e-15);
            for (x, p) in post.iter().enumerate() {
                let expected = if x == y { 0.5 } else { 0.25 };
                assert!((p - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_marginal_outputs_are_dropped() {
        let c = ChannelMatrix::new(vec![vec![0.5, 0.0, 0.5], vec![1.0, 0.0, 0.0]]).unwrap();
        let h = posterior_hyper(&Prior::uniform(2), &c).unwrap();
        assert_eq!(h.outputs, vec![0, 2]);
        let h = posterior_hyper(&Prior::point(2, 1), &c).unwrap();
        assert_eq!(h.outputs, vec![0]);
    }

    #[test]
    fn prior_and_gain_validation() {
        assert!(Prior::new(vec![0.3, 0.6]).is_err());
        assert!(Prior::new(vec![-0.5, 1.5]).is_err());
        assert!(GainFunction::new(vec![]).is_err());
        assert!(GainFunction::new(vec![vec![1.0, f64::INFINITY]]).is_err());
        assert!(posterior_hyper(&Prior::uniform(2), &grr3_ln2()).is_err());
    }
}
