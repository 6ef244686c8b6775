//! Reference systems and seeded random safe sets used by tests and benches.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::numlin::{Matrix, Vector};
use crate::polytope::{HPolytope, HyperBox};
use crate::system::LinearSystem;

/// `x₁⁺ = x₂, x₂⁺ = u` with `−1 ≤ x₁ ≤ 1`, `1.5x₂ ≤ x₁ ≤ 2x₂`, `|u| ≤ 1`.
///
/// The maximal CIS is the whole state projection, while every lasso
/// implicit RCIS projects to `{0}`.
pub fn example_one() -> (LinearSystem, HPolytope) {
    example_one_shrunk(0.0)
}

/// Example one with the cone tightened to `1.5x₂ + ε ≤ x₁`; empty maximal
/// CIS for any `ε > 0`.
pub fn example_one_shrunk(eps: f64) -> (LinearSystem, HPolytope) {
    let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
    #[rustfmt::skip]
    let g = Matrix::from_row_slice(6, 3, &[
        -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0,
        -1.0, 1.5, 0.0,
        1.0, -2.0, 0.0,
        0.0, 0.0, 1.0,
        0.0, 0.0, -1.0,
    ]);
    let f = Vector::from_row_slice(&[1.0, 1.0, -eps, 0.0, 1.0, 1.0]);
    let s = HPolytope::new(g, f).expect("finite data");
    (LinearSystem::nominal(a, b).expect("valid system"), s)
}

/// Double integrator `x₁⁺ = x₁ + x₂, x₂⁺ = x₂ + u` on `|x| ≤ 1`, `|u| ≤ 0.1`.
pub fn double_integrator() -> (LinearSystem, HPolytope) {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let s = HyperBox::new(Vector::from_row_slice(&[-1.0, -1.0, -0.1]), Vector::from_row_slice(&[1.0, 1.0, 0.1]))
        .expect("ordered bounds")
        .to_polytope();
    (LinearSystem::nominal(a, b).expect("valid system"), s)
}

/// Brunovsky chain: upper shift `A_n`, `B = e_n`.
pub fn brunovsky(n: usize) -> LinearSystem {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    let mut b = Matrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    LinearSystem::nominal(a, b).expect("valid system")
}

/// Brunovsky chain with disturbance `w ∈ [−w̄, w̄]` entering through `B`.
pub fn brunovsky_disturbed(n: usize, wbar: f64) -> LinearSystem {
    let sys = brunovsky(n);
    let e = sys.b().clone();
    sys.with_disturbance(e, HyperBox::symmetric(1, wbar).to_polytope()).expect("bounded W")
}

/// `k` constraints with normals uniform on the sphere and offsets in
/// `[0.5, 1.5]`, intersected with the box `|xᵢ| ≤ 5`. Contains the origin
/// in its interior and is bounded.
pub fn random_polytope<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<HPolytope> {
    let mut g = Matrix::zeros(k, n);
    let mut f = Vector::zeros(k);
    for i in 0..k {
        let d = loop {
            let d = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            if d.norm() > 1e-9 {
                break d.normalize();
            }
        };
        g.set_row(i, &d.transpose());
        f[i] = rng.random_range(0.5..1.5);
    }
    HPolytope::new(g, f)?.intersect(&HyperBox::symmetric(n, 5.0).to_polytope())
}

/// `S_xu = S_x × [−ū, ū]^m`.
pub fn with_input_box(sx: &HPolytope, m: usize, ubar: f64) -> HPolytope {
    sx.cartesian(&HyperBox::symmetric(m, ubar).to_polytope())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_polytopes_are_bounded_with_interior() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in 1..5 {
            let p = random_polytope(n, 2 * n, &mut rng).unwrap();
            assert!(p.is_bounded().unwrap());
            assert!(p.contains_point(&Vector::zeros(n), -0.49));
        }
    }

    #[test]
    fn reference_systems() {
        let (sys, s) = example_one();
        assert_eq!(sys.nu(), Some(2));
        assert!(s.is_bounded().unwrap());
        assert_eq!(brunovsky(4).nu(), Some(4));
        assert!(brunovsky_disturbed(3, 0.1).has_disturbance());
        let (di, _) = double_integrator();
        assert_eq!(di.nu(), None);
    }
}
