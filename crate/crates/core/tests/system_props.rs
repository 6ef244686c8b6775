mod common;

use lasso_cis::numlin::{mat_power, norm_inf, vcat, Matrix, Vector};
use lasso_cis::polytope::{HPolytope, HyperBox};
use lasso_cis::system::{Horizon, LinearSystem};
use proptest::prelude::*;
use rand::Rng;

use common::rng;

/// Random `(A, B)` with `n ≤ 4`, `m ≤ 2`, a box disturbance and a box safe set.
fn random_system(n: usize, m: usize, seed: u64) -> (LinearSystem, HPolytope) {
    let mut r = rng(seed);
    let a = Matrix::from_fn(n, n, |_, _| r.random_range(-1.5..1.5));
    let b = Matrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0));
    let sys = LinearSystem::new(a, b, Matrix::identity(n, n), HyperBox::symmetric(n, 0.1).to_polytope()).unwrap();
    (sys, HyperBox::symmetric(n + m, 1.0).to_polytope())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deadbeat_index_is_bounded(n in 1usize..5, m in 1usize..3, seed in any::<u64>()) {
        let (sys, s) = random_system(n, m, seed);
        prop_assume!(sys.controllability_rank(1e-8) == n);
        let nil = sys.nilpotentize(&s).unwrap();
        let nu = nil.system.nu().unwrap();
        prop_assert!(nu <= n);
        let acl = nil.system.a();
        prop_assert!(norm_inf(&mat_power(acl, nu)) <= 1e-9 * (1.0 + norm_inf(acl)).powi(nu as i32));

        // After ν steps the reach set no longer depends on the initial set.
        let inputs: Vec<Vector> = (0..nu + 1).map(|i| Vector::from_element(m, 0.1 * i as f64)).collect();
        let small = HyperBox::symmetric(n, 0.1).to_polytope();
        let large = HyperBox::symmetric(n, 3.0).to_polytope();
        let a = nil.system.reach_set(&small, &inputs).unwrap();
        let b = nil.system.reach_set(&large, &inputs).unwrap();
        let mut r = rng(seed ^ 9);
        for _ in 0..8 {
            let c = Vector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
            let (ha, hb) = (a.support(&c).unwrap(), b.support(&c).unwrap());
            // Only the numerical residual of A^ν can still see the initial set.
            let residual = 3.0 * c.lp_norm(1) * norm_inf(&a.map);
            prop_assert!((ha - hb).abs() <= residual + 1e-9 * (1.0 + ha.abs()), "{} vs {}", ha, hb);
        }
    }

    #[test]
    fn accumulated_disturbance_grows_then_freezes(n in 1usize..5, m in 1usize..3, seed in any::<u64>()) {
        let (sys, s) = random_system(n, m, seed);
        prop_assume!(sys.controllability_rank(1e-8) == n);
        let nil = sys.nilpotentize(&s).unwrap().system;
        let nu = nil.nu().unwrap();
        let mut r = rng(seed ^ 5);
        for _ in 0..6 {
            let c = Vector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
            let h: Vec<f64> = (0..=nu + 2).map(|t| nil.acc_disturbance(Horizon::Finite(t)).unwrap().support(&c).unwrap()).collect();
            prop_assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", h);
            let inf = nil.acc_disturbance(Horizon::Infinite).unwrap().support(&c).unwrap();
            for v in &h[nu..] {
                prop_assert!((v - inf).abs() <= 1e-12 * (1.0 + inf.abs()));
            }
        }
    }
}

#[test]
fn shifted_safe_set_round_trip() {
    for seed in 0..6u64 {
        let (sys, s) = random_system(3, 1 + (seed % 2) as usize, seed);
        if sys.controllability_rank(1e-8) < 3 {
            continue;
        }
        let nil = sys.nilpotentize(&s).unwrap();
        let (n, m) = (sys.n(), sys.m());
        let mut r = rng(seed);
        let mut inside = 0;
        for _ in 0..10_000 {
            let x = Vector::from_fn(n, |_, _| r.random_range(-1.2..1.2));
            let u = Vector::from_fn(m, |_, _| r.random_range(-1.2..1.2));
            let shifted = &u - &nil.gain * &x;
            let a = s.contains_point(&vcat(&x, &u), 0.0);
            // Tiny slack absorbs the rounding of u − Kx + Kx.
            let b = nil.safe_set.contains_point(&vcat(&x, &shifted), 1e-12);
            let b_strict = nil.safe_set.contains_point(&vcat(&x, &shifted), -1e-12);
            assert!(!a || b, "lost a safe pair");
            assert!(!b_strict || a, "gained an unsafe pair");
            inside += a as usize;
        }
        assert!(inside > 0);
    }
}
