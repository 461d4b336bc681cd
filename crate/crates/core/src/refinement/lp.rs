//! Refinement witnesses by linear programming.
//!
//! `B ⊑ A` is decided by minimising `t` subject to `-t <= (B·W - A)_ij <= t`,
//! `W >= 0` and unit row sums of `W`. The solver is a dense two-phase
//! simplex, generic over floats and exact rationals.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{RefinementMethod, RefinementVerdict};
use crate::channel::{index_labels, matmul, ChannelMatrix, RationalChannel};
use crate::error::{Error, Result};

/// Residual cutoff for floating-point verdicts.
pub const REFINE_TOLERANCE: f64 = 1e-8;

/// Degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

pub trait LpScalar: Clone + PartialOrd + Signed + Debug {
    /// Magnitudes at or below this count as zero when pivoting.
    fn tolerance() -> Self;
    /// Largest phase-one optimum accepted as feasible.
    fn feasibility_tolerance() -> Self;
    fn to_f64_lossy(&self) -> f64;
}

impl LpScalar for f64 {
    fn tolerance() -> Self {
        1e-11
    }
    fn feasibility_tolerance() -> Self {
        1e-9
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl LpScalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn feasibility_tolerance() -> Self {
        BigRational::zero()
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sense {
    Le,
    Ge,
    Eq,
}

struct Constraint<T> {
    coeffs: Vec<T>,
    sense: Sense,
    rhs: T,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced costs; the last entry is minus the objective value.
    obj: Vec<T>,
    basis: Vec<usize>,
    enterable: Vec<bool>,
    pivots: usize,
    limit: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn width(&self) -> usize {
        self.enterable.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let piv = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        self.rows[r][c] = T::one();
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for j in 0..=w {
                if !pivot_row[j].is_zero() {
                    row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
            row[c] = T::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn objective(&self) -> T {
        -self.obj[self.width()].clone()
    }

    fn optimize(&mut self) -> Result<Outcome> {
        let tol = T::tolerance();
        let neg_tol = -tol.clone();
        let mut bland = false;
        let mut stalled = 0;
        let mut last = self.objective();
        loop {
            if self.pivots >= self.limit {
                return Err(Error::SolverIterationLimit {
                    iterations: self.pivots,
                    best_residual: self.objective().to_f64_lossy(),
                });
            }
            let mut entering: Option<usize> = None;
            for j in 0..self.width() {
                if !self.enterable[j] || self.obj[j] >= neg_tol {
                    continue;
                }
                match entering {
                    None => entering = Some(j),
                    Some(e) if !bland && self.obj[j] < self.obj[e] => entering = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };
            let w = self.width();
            let mut leaving: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] <= tol {
                    continue;
                }
                let ratio = row[w].clone() / row[c].clone();
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((b, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[b]) {
                            Some((i, ratio))
                        } else {
                            Some((b, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leaving else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, c);
            let now = self.objective();
            if now < last.clone() - tol.clone() {
                stalled = 0;
                last = now;
            } else {
                stalled += 1;
                if stalled > STALL_LIMIT {
                    bland = true;
                }
            }
        }
    }

    fn set_costs(&mut self, costs: &[T]) {
        let w = self.width();
        let mut obj = vec![T::zero(); w + 1];
        obj[..costs.len()].clone_from_slice(costs);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = if b < costs.len() { costs[b].clone() } else { T::zero() };
            if cb.is_zero() {
                continue;
            }
            for j in 0..=w {
                obj[j] = obj[j].clone() - cb.clone() * row[j].clone();
            }
        }
        self.obj = obj;
    }
}

/// Minimises `cost · x` over `x >= 0` subject to the constraints.
fn solve_min<T: LpScalar>(nvars: usize, constraints: Vec<Constraint<T>>, cost: &[T]) -> Result<Vec<T>> {
    let m = constraints.len();
    let slack_count = constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    let mut needs_artificial = Vec::with_capacity(m);
    for c in &constraints {
        let flipped = c.rhs < T::zero();
        let slack_positive = match c.sense {
            Sense::Le => !flipped,
            Sense::Ge => flipped,
            Sense::Eq => false,
        };
        needs_artificial.push(!slack_positive);
    }
    let art_count = needs_artificial.iter().filter(|&&a| a).count();
    let art_start = nvars + slack_count;
    let width = art_start + art_count;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (nvars, art_start);
    for (c, &art) in constraints.into_iter().zip(&needs_artificial) {
        let flip = c.rhs < T::zero();
        let sign = |v: T| if flip { -v } else { v };
        let mut row = vec![T::zero(); width + 1];
        for (j, v) in c.coeffs.into_iter().enumerate() {
            row[j] = sign(v);
        }
        row[width] = sign(c.rhs);
        let mut slack_col = None;
        match c.sense {
            Sense::Le => {
                row[next_slack] = sign(T::one());
                slack_col = Some(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = sign(-T::one());
                slack_col = Some(next_slack);
                next_slack += 1;
            }
            Sense::Eq => {}
        }
        if art {
            row[next_art] = T::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack_col.expect("non-artificial rows have a slack"));
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        enterable: vec![true; width],
        pivots: 0,
        limit: 50 * (m + width) + 1000,
    };

    if art_count > 0 {
        let mut phase1 = vec![T::zero(); width];
        for c in phase1.iter_mut().skip(art_start) {
            *c = T::one();
        }
        t.set_costs(&phase1);
        t.optimize()?;
        // Phase-1 optimum above zero means the constraints are infeasible.
        // The refinement program is always feasible, so this only guards
        // against numerical breakdown.
        if t.objective() > T::feasibility_tolerance() {
            return Err(Error::SolverIterationLimit {
                iterations: t.pivots,
                best_residual: f64::INFINITY,
            });
        }
        let tol = T::tolerance();
        let mut keep = vec![true; t.rows.len()];
        for (r, kept) in keep.iter_mut().enumerate() {
            if t.basis[r] < art_start {
                continue;
            }
            let col = (0..art_start).find(|&j| t.rows[r][j].abs() > tol);
            match col {
                Some(j) => t.pivot(r, j),
                None => *kept = false,
            }
        }
        let mut i = 0;
        t.rows.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        t.basis.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        for e in t.enterable.iter_mut().skip(art_start) {
            *e = false;
        }
    }

    t.set_costs(cost);
    match t.optimize()? {
        Outcome::Optimal => {}
        Outcome::Unbounded => {
            return Err(Error::SolverIterationLimit {
                iterations: t.pivots,
                best_residual: f64::NEG_INFINITY,
            })
        }
    }
    let mut x = vec![T::zero(); nvars];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < nvars {
            x[b] = row[t.width()].clone();
        }
    }
    Ok(x)
}

/// Solves the refinement program for `b` (`r × m`) and `a` (`r × n`), both
/// row-major. Returns the witness `W` (`m × n`, row-major) and the optimal
/// max-norm residual `t`.
fn refinement_program<T: LpScalar>(b: &[T], a: &[T], r: usize, m: usize, n: usize) -> Result<(Vec<T>, T)> {
    let nvars = m * n + 1;
    let t_col = m * n;
    let mut constraints = Vec::with_capacity(2 * r * n + m);
    for i in 0..r {
        for j in 0..n {
            let mut upper = vec![T::zero(); nvars];
            for l in 0..m {
                upper[l * n + j] = b[i * m + l].clone();
            }
            let mut lower = upper.clone();
            upper[t_col] = -T::one();
            lower[t_col] = T::one();
            constraints.push(Constraint {
                coeffs: upper,
                sense: Sense::Le,
                rhs: a[i * n + j].clone(),
            });
            constraints.push(Constraint {
                coeffs: lower,
                sense: Sense::Ge,
                rhs: a[i * n + j].clone(),
            });
        }
    }
    for l in 0..m {
        let mut coeffs = vec![T::zero(); nvars];
        for c in coeffs.iter_mut().skip(l * n).take(n) {
            *c = T::one();
        }
        constraints.push(Constraint {
            coeffs,
            sense: Sense::Eq,
            rhs: T::one(),
        });
    }
    let mut cost = vec![T::zero(); nvars];
    cost[t_col] = T::one();
    let mut x = solve_min(nvars, constraints, &cost)?;
    let t = x.pop().expect("t variable present");
    Ok((x, t))
}

fn check_rows(b_rows: usize, a_rows: usize) -> Result<()> {
    if b_rows == a_rows {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "refinement needs equal input counts, got {b_rows} and {a_rows}"
        )))
    }
}

/// Float LP verdict for `B ⊑ A`. The witness is clamped to the simplex
/// before the residual is recomputed, so the reported residual is that of
/// an actual channel.
pub fn refines_lp(b: &ChannelMatrix, a: &ChannelMatrix, tolerance: f64) -> Result<RefinementVerdict> {
    check_rows(b.rows(), a.rows())?;
    let (r, m, n) = (b.rows(), b.cols(), a.cols());
    if m == n && b.entries() == a.entries() {
        let w = ChannelMatrix::identity(m).relabel(b.output_labels().to_vec(), a.output_labels().to_vec())?;
        return Ok(RefinementVerdict {
            holds: true,
            residual: 0.0,
            method: RefinementMethod::LpWitness,
            witness: Some(w),
        });
    }
    let (mut w, _) = refinement_program(b.entries(), a.entries(), r, m, n)?;
    for row in w.chunks_mut(n) {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / n as f64);
        }
    }
    let product = matmul(b.entries(), r, m, &w, n);
    let residual = product
        .iter()
        .zip(a.entries())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let holds = residual <= tolerance;
    let witness = if holds {
        Some(ChannelMatrix::normalized(
            m,
            n,
            w,
            b.output_labels().to_vec(),
            a.output_labels().to_vec(),
        )?)
    } else {
        None
    };
    Ok(RefinementVerdict {
        holds,
        residual,
        method: RefinementMethod::LpWitness,
        witness,
    })
}

/// Exact verdict for `B ⊑ A` over rationals.
pub fn refines_rational(b: &RationalChannel, a: &RationalChannel) -> Result<RefinementVerdict> {
    check_rows(b.rows(), a.rows())?;
    let (r, m, n) = (b.rows(), b.cols(), a.cols());
    let flat = |c: &RationalChannel| -> Vec<BigRational> {
        (0..c.rows())
            .flat_map(|x| (0..c.cols()).map(move |y| (x, y)))
            .map(|(x, y)| c.get(x, y).clone())
            .collect()
    };
    let (w, t) = refinement_program(&flat(b), &flat(a), r, m, n)?;
    let holds = t.is_zero();
    let witness = if holds {
        let entries = w.iter().map(LpScalar::to_f64_lossy).collect();
        Some(ChannelMatrix::normalized(m, n, entries, index_labels(m), index_labels(n))?)
    } else {
        None
    };
    Ok(RefinementVerdict {
        holds,
        residual: t.to_f64_lossy(),
        method: RefinementMethod::ExactRational,
        witness,
    })
}

/// Exact verdict on the rational images of two float channels. Limited to
/// channels with at most [`crate::channel::MAX_EXACT_COLUMNS`] columns.
pub fn refines_exact(b: &ChannelMatrix, a: &ChannelMatrix) -> Result<RefinementVerdict> {
    let mut v = refines_rational(&RationalChannel::from_channel(b)?, &RationalChannel::from_channel(a)?)?;
    if let Some(w) = v.witness.take() {
        v.witness = Some(w.relabel(b.output_labels().to_vec(), a.output_labels().to_vec())?);
    }
    Ok(v)
}
