use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lp::{refines_lp, REFINE_TOLERANCE};
use super::tradeoff::refines_2x2;
use super::RefinementVerdict;
use crate::channel::{ChannelMatrix, DEFAULT_SIZE_CAP};
use crate::error::{Error, Result};
use crate::mechanisms::{bitwise, grr_channel, onehot_channel, BitwiseProtocol};

/// A mechanism family indexed by `ε`, with its other parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Grr {
        k: usize,
    },
    Bitwise {
        protocol: BitwiseProtocol,
        theta: Option<f64>,
    },
    OneHot {
        protocol: BitwiseProtocol,
        k: usize,
        theta: Option<f64>,
    },
}

impl Family {
    pub fn channel(&self, epsilon: f64) -> Result<ChannelMatrix> {
        match *self {
            Family::Grr { k } => grr_channel(k, epsilon),
            Family::Bitwise { protocol, theta } => bitwise(protocol, epsilon, theta),
            Family::OneHot { protocol, k, theta } => onehot_channel(protocol, k, epsilon, theta, DEFAULT_SIZE_CAP),
        }
    }

    fn refines(&self, b: &ChannelMatrix, a: &ChannelMatrix) -> Result<RefinementVerdict> {
        match self {
            Family::Bitwise { .. } => refines_2x2(b, a),
            _ => refines_lp(b, a, REFINE_TOLERANCE),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyPair {
    pub epsilon_low: f64,
    pub epsilon_high: f64,
    pub holds: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub family: Family,
    pub pairs: Vec<FamilyPair>,
}

impl FamilyReport {
    pub fn all_hold(&self) -> bool {
        self.pairs.iter().all(|p| p.holds)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epsilon_low,epsilon_high,holds,residual\n");
        for p in &self.pairs {
            out.push_str(&format!("{},{},{},{}\n", p.epsilon_low, p.epsilon_high, p.holds, p.residual));
        }
        out
    }
}

fn check_grid(epsilons: &[f64]) -> Result<()> {
    let ascending = epsilons.windows(2).all(|w| w[0] <= w[1]);
    if epsilons.len() < 2 || !ascending || epsilons.iter().any(|e| !e.is_finite()) {
        return Err(Error::AscendingGridRequired);
    }
    Ok(())
}

fn check_pairs(family: Family, epsilons: &[f64], reversed: bool) -> Result<FamilyReport> {
    check_grid(epsilons)?;
    let pairs = epsilons
        .par_windows(2)
        .map(|w| {
            let (low, high) = (w[0], w[1]);
            let m_low = family.channel(low)?;
            let m_high = family.channel(high)?;
            let v = if reversed {
                family.refines(&m_low, &m_high)?
            } else {
                family.refines(&m_high, &m_low)?
            };
            Ok(FamilyPair {
                epsilon_low: low,
                epsilon_high: high,
                holds: v.holds,
                residual: v.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyReport { family, pairs })
}

/// Checks `M_high ⊑ M_low` for every adjacent pair of the grid.
pub fn verify_refinement_family(family: Family, epsilons: &[f64]) -> Result<FamilyReport> {
    check_pairs(family, epsilons, false)
}

/// Checks the reverse relation `M_low ⊑ M_high`, which should fail whenever
/// the budgets differ.
pub fn verify_anti_direction(family: Family, epsilons: &[f64]) -> Result<FamilyReport> {
    check_pairs(family, epsilons, true)
}
