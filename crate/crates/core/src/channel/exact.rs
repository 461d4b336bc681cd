//! Exact-rational channels for oracle checks on small instances.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{index_labels, ChannelMatrix};
use crate::error::{Error, Result};

/// Widest channel accepted in exact mode.
pub const MAX_EXACT_COLUMNS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalChannel {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

/// `n / d` as a big rational.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl RationalChannel {
    /// Rows must be non-negative and sum to exactly one.
    pub fn new(raw: Vec<Vec<BigRational>>) -> Result<Self> {
        let rows = raw.len();
        let cols = raw.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || raw.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("exact channel must be non-empty and rectangular".into()));
        }
        if cols > MAX_EXACT_COLUMNS {
            return Err(Error::ExactModeTooWide {
                cols,
                max: MAX_EXACT_COLUMNS,
            });
        }
        for (row, r) in raw.iter().enumerate() {
            if let Some(col) = r.iter().position(Signed::is_negative) {
                return Err(Error::NegativeEntry {
                    row,
                    col,
                    value: r[col].to_f64().unwrap_or(f64::NAN),
                });
            }
            let sum: BigRational = r.iter().sum();
            if !sum.is_one() {
                let residual = (sum - BigRational::one()).abs();
                return Err(Error::NonStochasticRow {
                    row,
                    residual: residual.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(RationalChannel {
            rows,
            cols,
            entries: raw.into_iter().flatten().collect(),
        })
    }

    /// Exact image of a float channel. Each float is converted without
    /// rounding; the largest entry of every row then absorbs the row's
    /// residual so that the row sums to exactly one.
    pub fn from_channel(c: &ChannelMatrix) -> Result<Self> {
        let mut raw = Vec::with_capacity(c.rows());
        for x in 0..c.rows() {
            let mut row: Vec<BigRational> = c
                .row(x)
                .iter()
                .map(|&v| BigRational::from_float(v.max(0.0)).unwrap_or_else(BigRational::zero))
                .collect();
            let (imax, _) = c
                .row(x)
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
            let others: BigRational = row
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != imax)
                .map(|(_, v)| v.clone())
                .sum();
            row[imax] = BigRational::one() - others;
            raw.push(row);
        }
        Self::new(raw)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> &BigRational {
        &self.entries[x * self.cols + y]
    }

    /// Sum of column maxima.
    pub fn bayes_capacity(&self) -> BigRational {
        (0..self.cols)
            .map(|y| {
                (0..self.rows)
                    .map(|x| self.get(x, y))
                    .max()
                    .cloned()
                    .unwrap_or_else(BigRational::zero)
            })
            .sum()
    }

    pub fn cascade(&self, next: &RationalChannel) -> Result<RationalChannel> {
        if self.cols != next.rows {
            return Err(Error::DimensionMismatch("cannot cascade exact channels".into()));
        }
        let mut raw = vec![vec![BigRational::zero(); next.cols]; self.rows];
        for (i, out) in raw.iter_mut().enumerate() {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o += a * next.get(l, j);
                }
            }
        }
        Self::new(raw)
    }

    /// Nearest-float image.
    pub fn to_channel(&self) -> Result<ChannelMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect();
        ChannelMatrix::normalized(
            self.rows,
            self.cols,
            entries,
            index_labels(self.rows),
            index_labels(self.cols),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rows_must_sum_to_one() {
        assert!(RationalChannel::new(vec![vec![ratio(1, 3), ratio(2, 3)]]).is_ok());
        assert!(matches!(
            RationalChannel::new(vec![vec![ratio(1, 3), ratio(1, 3)]]),
            Err(Error::NonStochasticRow { row: 0, .. })
        ));
        assert!(matches!(
            RationalChannel::new(vec![vec![ratio(4, 3), ratio(-1, 3)]]),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn too_wide_is_rejected() {
        let row = vec![ratio(1, 65); 65];
        assert!(matches!(
            RationalChannel::new(vec![row]),
            Err(Error::ExactModeTooWide { cols: 65, .. })
        ));
    }

    #[test]
    fn from_float_closes_rows() {
        let c = ChannelMatrix::new(vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![0.1, 0.9]]).unwrap();
        let e = RationalChannel::from_channel(&c).unwrap();
        for x in 0..2 {
            let s: BigRational = (0..2).map(|y| e.get(x, y).clone()).sum();
            assert!(s.is_one());
        }
        assert!(e.to_channel().unwrap().max_abs_diff(&c).unwrap() < 1e-15);
    }

    #[test]
    fn exact_capacity_of_rr() {
        let c = RationalChannel::new(vec![
            vec![ratio(3, 4), ratio(1, 4)],
            vec![ratio(1, 4), ratio(3, 4)],
        ])
        .unwrap();
        assert_eq!(c.bayes_capacity(), ratio(3, 2));
    }
}
