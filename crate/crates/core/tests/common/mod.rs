#![allow(dead_code)]

use lasso_cis::instances::{brunovsky, brunovsky_disturbed, random_polytope, with_input_box};
use lasso_cis::invariance::ImplicitRcis;
use lasso_cis::numlin::{Matrix, Vector};
use lasso_cis::polytope::{HPolytope, HyperBox};
use lasso_cis::system::LinearSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brunovsky chain of length `n` on a seeded random safe set with `|u| ≤ 0.5`,
/// disturbed through `B` when `wbar > 0`.
pub fn chain_instance(n: usize, wbar: f64, seed: u64) -> (LinearSystem, HPolytope) {
    let sx = random_polytope(n, 2 * n, &mut rng(seed)).unwrap();
    let sys = if wbar > 0.0 { brunovsky_disturbed(n, wbar) } else { brunovsky(n) };
    (sys, with_input_box(&sx, 1, 0.5))
}

/// 2D chain with a two-dimensional box disturbance entering every state.
pub fn planar_box_disturbance(wbar: f64) -> (LinearSystem, HPolytope) {
    let sys = brunovsky(2).with_disturbance(Matrix::identity(2, 2), HyperBox::symmetric(2, wbar).to_polytope()).unwrap();
    let s = HyperBox::new(Vector::from_row_slice(&[-1.0, -1.0, -0.5]), Vector::from_row_slice(&[1.0, 1.0, 0.5])).unwrap().to_polytope();
    (sys, s)
}

fn unit(n: usize, r: &mut ChaCha8Rng) -> Vector {
    loop {
        let d = Vector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        if d.norm() > 1e-9 {
            return d.normalize();
        }
    }
}

/// Hit-and-run samples from a bounded polytope started at its Chebyshev
/// center; empty when the polytope is empty.
pub fn hit_and_run(p: &HPolytope, count: usize, seed: u64) -> Vec<Vector> {
    let Some((mut x, _)) = p.chebyshev().unwrap() else {
        return vec![];
    };
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let thin = 5;
    while out.len() < count {
        for _ in 0..thin {
            let d = unit(p.dim(), &mut r);
            let gd = p.g() * &d;
            let slack = p.f() - p.g() * &x;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..gd.len() {
                if gd[i] > 1e-12 {
                    hi = hi.min(slack[i].max(0.0) / gd[i]);
                } else if gd[i] < -1e-12 {
                    lo = lo.max(-slack[i].max(0.0) / -gd[i]);
                }
            }
            if lo.is_finite() && hi.is_finite() && hi > lo {
                x += d * r.random_range(lo..=hi);
            }
        }
        out.push(x.clone());
    }
    out
}

/// Uniform points of `inside` by rejection from `region`.
pub fn rejection(inside: impl Fn(&Vector) -> bool, region: &HyperBox, count: usize, seed: u64) -> Vec<Vector> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < count * 1000 {
        tries += 1;
        let x = Vector::from_fn(region.dim(), |i, _| r.random_range(region.lower[i]..=region.upper[i]));
        if inside(&x) {
            out.push(x);
        }
    }
    out
}

/// Whether `u` is admissible at `x` with one shared generator state for all
/// disturbance vertices, assembled directly from the rows of `C_xv`.
pub fn admissible_by_lp(sys: &LinearSystem, sxu: &HPolytope, ir: &ImplicitRcis, vertices: &[Vector], x: &Vector, u: &Vector) -> bool {
    let n = sys.n();
    if !sxu.contains_point(&lasso_cis::numlin::vcat(x, u), 0.0) {
        return false;
    }
    let d = ir.dim_v();
    let c = &ir.polytope;
    let rows = c.nrows() * vertices.len();
    let mut g = Matrix::zeros(rows, d);
    let mut f = Vector::zeros(rows);
    for (k, w) in vertices.iter().enumerate() {
        let next = sys.a() * x + sys.b() * u + sys.e() * w;
        for i in 0..c.nrows() {
            let row = c.g().row(i);
            let fixed: f64 = (0..n).map(|j| row[j] * next[j]).sum();
            for j in 0..d {
                g[(k * c.nrows() + i, j)] = row[n + j];
            }
            f[k * c.nrows() + i] = c.f()[i] - fixed;
        }
    }
    !HPolytope::new(g, f).unwrap().is_empty().unwrap()
}

/// Vertices of `W`, or the single zero disturbance.
pub fn disturbance_vertices(sys: &LinearSystem) -> Vec<Vector> {
    if sys.has_disturbance() {
        sys.w().vertices(4096).unwrap()
    } else {
        vec![Vector::zeros(sys.w().dim())]
    }
}

/// Largest vertex-set diameter of a bounded polytope.
pub fn diameter(p: &HPolytope) -> f64 {
    let v = p.vertices(4096).unwrap();
    let mut d: f64 = 0.0;
    for a in &v {
        for b in &v {
            d = d.max((a - b).norm());
        }
    }
    d
}
