mod common;

use lasso_cis::invariance::{implicit_rcis, invariance_check, LassoSpec};
use lasso_cis::oracle::{maximal_rcis, outer_bound, pre, weak_completeness, DEFAULT_MAX_ITERS};
use proptest::prelude::*;
use rand::Rng;

use common::{chain_instance, rng};

const SLACK: f64 = 1e-7;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn outer_bound_sits_between(n in 2usize..4, wbar in 0.0f64..0.25, seed in any::<u64>()) {
        let (sys, sxu) = chain_instance(n, wbar, seed);
        let cmax = maximal_rcis(&sys, &sxu, DEFAULT_MAX_ITERS, SLACK).unwrap();
        prop_assume!(cmax.converged);
        let outer = outer_bound(&sys, &sxu).unwrap().set;
        let inner = implicit_rcis(&sys, &sxu, &LassoSpec::lasso(1, 2, 1).unwrap()).unwrap().explicit().unwrap();
        prop_assert!(outer.contains_within(&inner, 1e-6).unwrap());
        prop_assert!(cmax.set.contains_within(&outer, 1e-6).unwrap());
    }

    #[test]
    fn outer_bound_is_invariant(n in 2usize..4, wbar in 0.0f64..0.25, seed in any::<u64>()) {
        let (sys, sxu) = chain_instance(n, wbar, seed);
        let outer = outer_bound(&sys, &sxu).unwrap().set;
        prop_assume!(!outer.is_empty().unwrap());
        let report = invariance_check(&sys, &sxu, &outer, 200, seed).unwrap();
        prop_assert!(report.passed(), "witness {:?}", report.witness);
    }

    #[test]
    fn maximal_set_is_a_fixed_point(n in 2usize..4, wbar in 0.0f64..0.25, seed in any::<u64>()) {
        let (sys, sxu) = chain_instance(n, wbar, seed);
        let cmax = maximal_rcis(&sys, &sxu, DEFAULT_MAX_ITERS, SLACK).unwrap();
        prop_assume!(cmax.converged);
        let next = pre(&sys, &sxu, &cmax.set).unwrap().intersect(&cmax.set).unwrap();
        prop_assert!(next.set_eq(&cmax.set, 1e-6).unwrap());
    }
}

#[test]
fn completeness_never_disagrees() {
    let mut r = rng(404);
    let (mut empty, mut nonempty) = (0, 0);
    for i in 0..100u64 {
        let wbar = r.random_range(0.0..0.6);
        let (sys, sxu) = chain_instance(2, wbar, 7000 + i);
        let report = weak_completeness(&sys, &sxu).unwrap_or_else(|e| panic!("instance {i}: {e}"));
        if report.implicit_empty {
            empty += 1;
        } else {
            nonempty += 1;
        }
    }
    assert!(empty > 0 && nonempty > 0, "suite covers only one verdict: {empty} empty, {nonempty} nonempty");
}
