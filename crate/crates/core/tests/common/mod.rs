#![allow(dead_code)]

use ldp_qif::channel::DEFAULT_SIZE_CAP;
use ldp_qif::{ChannelMatrix, GainFunction, MechanismSpec, Prior, Protocol};
use proptest::prelude::*;

pub const LN2: f64 = std::f64::consts::LN_2;

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Weights bounded away from zero so that no row is empty.
fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, n).prop_map(normalize)
}

/// Weights that may contain exact zeros.
fn sparse_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.001f64..1.0], n).prop_filter_map("all zero", |w| {
        (w.iter().sum::<f64>() > 0.0).then(|| normalize(w))
    })
}

pub fn channel_of(rows: usize, cols: usize) -> impl Strategy<Value = ChannelMatrix> {
    prop::collection::vec(sparse_weights(cols), rows).prop_map(|r| ChannelMatrix::new(r).unwrap())
}

pub fn channel(max_rows: usize, max_cols: usize) -> impl Strategy<Value = ChannelMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| channel_of(r, c))
}

pub fn prior(n: usize) -> impl Strategy<Value = Prior> {
    sparse_weights(n).prop_map(|w| Prior::new(w).unwrap())
}

pub fn full_prior(n: usize) -> impl Strategy<Value = Prior> {
    weights(n).prop_map(|w| Prior::new(w).unwrap())
}

/// Nonnegative gains, so that every leakage ratio is defined.
pub fn gain(secrets: usize) -> impl Strategy<Value = GainFunction> {
    (1usize..=5).prop_flat_map(move |a| {
        prop::collection::vec(prop::collection::vec(0.0f64..2.0, secrets), a)
            .prop_map(|g| GainFunction::new(g).unwrap())
    })
}

/// Gains of either sign.
pub fn signed_gain(secrets: usize) -> impl Strategy<Value = GainFunction> {
    (1usize..=5).prop_flat_map(move |a| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, secrets), a)
            .prop_map(|g| GainFunction::new(g).unwrap())
    })
}

pub const EPSILONS: [f64; 6] = [0.0, 0.5, LN2, 1.0, 2.0, 3.0];
pub const THETAS: [f64; 3] = [0.6, 0.75, 0.9];

/// Every builder configuration on a small grid.
pub fn desk_specs(ks: std::ops::RangeInclusive<usize>) -> Vec<MechanismSpec> {
    let mut out = Vec::new();
    for k in ks {
        for &e in &EPSILONS {
            out.push(MechanismSpec::grr(k, e).unwrap());
            for omega in 1..k {
                out.push(MechanismSpec::ss(k, e, Some(omega)).unwrap());
            }
            out.push(MechanismSpec::sue(k, e).unwrap());
            out.push(MechanismSpec::oue(k, e).unwrap());
            for &t in &THETAS {
                out.push(MechanismSpec::the(k, e, t).unwrap());
            }
            if k <= 5 {
                out.push(MechanismSpec::blh(k, e).unwrap());
                for g in [2, 3] {
                    out.push(MechanismSpec::olh(k, e, Some(g)).unwrap());
                }
            }
        }
    }
    out
}

pub fn explicit(spec: &MechanismSpec) -> ChannelMatrix {
    spec.channel_with_cap(DEFAULT_SIZE_CAP).unwrap()
}

pub fn all_protocols(k: usize, epsilon: f64) -> Vec<MechanismSpec> {
    Protocol::ALL
        .iter()
        .map(|&p| match p {
            Protocol::The => MechanismSpec::the(k, epsilon, 0.75).unwrap(),
            _ => MechanismSpec::new(p, k, epsilon).unwrap(),
        })
        .collect()
}
