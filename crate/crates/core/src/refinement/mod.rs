//! Refinement between channels.
//!
//! `B ⊑ A` means `A = B·W` for some channel `W`: `A` is a post-processing of
//! `B` and leaks no more than `B` to any adversary.

mod family;
mod lp;
mod tradeoff;

use serde::Serialize;

pub use family::{verify_anti_direction, verify_refinement_family, Family, FamilyPair, FamilyReport};
pub use lp::{refines_exact, refines_lp, refines_rational, LpScalar, REFINE_TOLERANCE};
pub use tradeoff::{
    max_case_refines_2x2, refines_2x2, theta_threshold, tradeoff_leq, tradeoff_point, TradeoffFunction,
    TradeoffPoint, RATIO_TIE_TOLERANCE,
};

use crate::channel::ChannelMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementMethod {
    #[serde(rename = "tradeoff_2x2")]
    Tradeoff2x2,
    LpWitness,
    ExactRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementVerdict {
    pub holds: bool,
    pub residual: f64,
    pub method: RefinementMethod,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "witness_rows")]
    pub witness: Option<ChannelMatrix>,
}

fn witness_rows<S: serde::Serializer>(w: &Option<ChannelMatrix>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        Some(w) => s.serialize_some(&w.to_rows()),
        None => s.serialize_none(),
    }
}
