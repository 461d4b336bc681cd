mod common;

use common::*;
use ldp_qif::channel::DEFAULT_SIZE_CAP;
use ldp_qif::leakage::{
    average_case_leakage, bayes_capacity, bayes_capacity_closed, epsilon_of, max_case_leakage, posterior_vulnerability,
    prior_vulnerability,
};
use ldp_qif::mechanisms::{grr_channel, ss_channel};
use ldp_qif::{ChannelMatrix, MechanismSpec, Protocol};
use proptest::prelude::*;

/// Sum of column maxima, written out independently of the library.
fn column_max_sum(c: &ChannelMatrix) -> f64 {
    let rows = c.to_rows();
    (0..c.cols())
        .map(|y| rows.iter().map(|r| r[y]).fold(0.0, f64::max))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn miracle_bound(
        (g, pi, c) in (1usize..=5, 1usize..=6)
            .prop_flat_map(|(n, m)| (gain(n), full_prior(n), channel_of(n, m)))
    ) {
        let prior = prior_vulnerability(&g, &pi).unwrap();
        prop_assume!(prior > 1e-9);
        let l = average_case_leakage(&g, &pi, &c).unwrap().multiplicative_leakage;
        prop_assert!(l <= bayes_capacity(&c) * (1.0 + 1e-9), "{} > {}", l, bayes_capacity(&c));
    }

    #[test]
    fn posterior_never_below_prior(
        (g, pi, c) in (1usize..=5, 1usize..=6)
            .prop_flat_map(|(n, m)| (signed_gain(n), prior(n), channel_of(n, m)))
    ) {
        let r = average_case_leakage(&g, &pi, &c).unwrap();
        prop_assert!(r.posterior_vulnerability >= r.prior_vulnerability - 1e-12);
    }

    #[test]
    fn max_case_posterior_within_prior(
        (g, pi, c) in (1usize..=5, 1usize..=6)
            .prop_flat_map(|(n, m)| (gain(n), full_prior(n), channel_of(n, m)))
    ) {
        // Entries of C never exceed one, and the largest entry of the
        // maximizing row attains at least a 1/cols share.
        let r = max_case_leakage(&g, &pi, &c).unwrap();
        prop_assert!(r.posterior_vulnerability <= r.prior_vulnerability + 1e-15);
        let best_entry = (0..c.rows()).map(|x| c.row(x).iter().cloned().fold(0.0, f64::max)).fold(1.0, f64::min);
        prop_assert!(r.posterior_vulnerability >= r.prior_vulnerability * best_entry - 1e-15);
    }

    #[test]
    fn capacity_is_column_max_sum(c in channel(6, 6)) {
        prop_assert!((bayes_capacity(&c) - column_max_sum(&c)).abs() <= 1e-12);
        prop_assert!(bayes_capacity(&c) >= 1.0 - 1e-12);
        prop_assert!(bayes_capacity(&c) <= c.rows().min(c.cols()) as f64 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn data_processing(
        (c, w) in (1usize..=5, 1usize..=5, 1usize..=5)
            .prop_flat_map(|(n, m, p)| (channel_of(n, m), channel_of(m, p)))
    ) {
        let post = bayes_capacity(&c.cascade(&w).unwrap());
        prop_assert!(post <= bayes_capacity(&c) * (1.0 + 1e-9));
    }

    #[test]
    fn gain_leakage_respects_post_processing(
        (g, pi, c, w) in (1usize..=4, 1usize..=4, 1usize..=4)
            .prop_flat_map(|(n, m, p)| (signed_gain(n), prior(n), channel_of(n, m), channel_of(m, p)))
    ) {
        let before = posterior_vulnerability(&g, &pi, &c).unwrap();
        let after = posterior_vulnerability(&g, &pi, &c.cascade(&w).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-9);
    }
}

#[test]
fn closed_forms_match_explicit_channels() {
    for spec in desk_specs(2..=8) {
        let closed = bayes_capacity_closed(&spec).unwrap();
        let oracle = column_max_sum(&explicit(&spec));
        assert!((closed - oracle).abs() <= 1e-9, "{spec}: {closed} vs {oracle}");
    }
}

#[test]
fn builders_satisfy_their_budget() {
    for spec in desk_specs(2..=6) {
        let c = explicit(&spec);
        let ratio = epsilon_of(&c).exp();
        assert!(ratio <= spec.epsilon().exp() * (1.0 + 1e-9), "{spec}: ratio {ratio}");
    }
}

#[test]
fn sue_budget_is_tight() {
    for k in 2..=6 {
        for e in [0.5, 1.0, 2.0, 3.0] {
            let c = explicit(&MechanismSpec::sue(k, e).unwrap());
            assert!((epsilon_of(&c) - e).abs() <= 1e-9, "k {k} eps {e}");
        }
    }
}

#[test]
fn max_case_capacity_dominates_bayes_capacity() {
    for spec in desk_specs(2..=6) {
        let c = explicit(&spec);
        assert!(bayes_capacity(&c) <= epsilon_of(&c).exp() * (1.0 + 1e-9), "{spec}");
    }
}

#[test]
fn single_subsets_are_randomized_response() {
    for k in 2..=6 {
        for e in [0.0, LN2, 2.0] {
            let ss = ss_channel(k, e, Some(1), DEFAULT_SIZE_CAP).unwrap();
            let grr = grr_channel(k, e).unwrap();
            let diff = ss
                .entries()
                .iter()
                .zip(grr.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-12, "k {k} eps {e}");
        }
    }
}

#[test]
fn budget_does_not_order_capacity() {
    // Local hashing with a larger budget still leaks less than GRR with a
    // smaller one.
    let a = explicit(&MechanismSpec::blh(5, 3.0).unwrap());
    let b = explicit(&MechanismSpec::grr(5, 2.0).unwrap());
    assert!(epsilon_of(&a).exp() > epsilon_of(&b).exp());
    assert!(bayes_capacity(&a) < bayes_capacity(&b));
}

#[test]
fn zero_budget_leaks_nothing() {
    for spec in all_protocols(5, 0.0) {
        let closed = bayes_capacity_closed(&spec).unwrap();
        assert!((closed - 1.0).abs() <= 1e-12, "{spec}: {closed}");
    }
}

#[test]
fn capacity_grows_with_budget() {
    for p in Protocol::ALL {
        let mut last = 0.0;
        for e in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let spec = match p {
                Protocol::The => MechanismSpec::the(20, e, 0.75).unwrap(),
                Protocol::Olh => MechanismSpec::olh(20, e, Some(4)).unwrap(),
                _ => MechanismSpec::new(p, 20, e).unwrap(),
            };
            let v = bayes_capacity_closed(&spec).unwrap();
            assert!(v >= last - 1e-12, "{spec}: {v} < {last}");
            last = v;
        }
    }
}
