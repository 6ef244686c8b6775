//! Seeded Monte Carlo volume, sampling and Hausdorff estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{HPolytope, HyperBox};
use crate::error::Result;
use crate::numlin::Vector;

const DIRECTION_SEED: u64 = 0x4a75_6c79;

fn box_point(b: &HyperBox, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(b.dim(), |i, _| {
        let (lo, hi) = (b.lower[i], b.upper[i]);
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    })
}

fn full_box(p: &HPolytope) -> Result<Option<HyperBox>> {
    Ok(p.bounding_box()?.filter(|b| b.widths().iter().all(|w| *w > 1e-12)))
}

/// Hit ratio in the bounding box times its volume.
///
/// Empty and lower-dimensional polytopes report 0.
pub fn mc_volume(p: &HPolytope, samples: usize, seed: u64) -> Result<f64> {
    let Some(b) = full_box(p)? else {
        return Ok(0.0);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples).filter(|_| p.contains_point(&box_point(&b, &mut rng), 0.0)).count();
    Ok(b.volume() * hits as f64 / samples.max(1) as f64)
}

/// `vol(inner ∩ outer) / vol(outer)` from one shared sample stream.
pub fn mc_volume_ratio(inner: &HPolytope, outer: &HPolytope, samples: usize, seed: u64) -> Result<f64> {
    let Some(b) = full_box(outer)? else {
        return Ok(0.0);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut outer_hits, mut inner_hits) = (0usize, 0usize);
    for _ in 0..samples {
        let x = box_point(&b, &mut rng);
        if outer.contains_point(&x, 0.0) {
            outer_hits += 1;
            if inner.contains_point(&x, 0.0) {
                inner_hits += 1;
            }
        }
    }
    Ok(if outer_hits == 0 { 0.0 } else { inner_hits as f64 / outer_hits as f64 })
}

/// Up to `count` uniform points by rejection from the bounding box.
pub fn sample_uniform(p: &HPolytope, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let Some(b) = p.bounding_box()? else {
        return Ok(vec![]);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count.saturating_mul(2000).max(10_000) {
        attempts += 1;
        let x = box_point(&b, &mut rng);
        if p.contains_point(&x, 1e-12) {
            out.push(x);
        }
    }
    if out.is_empty() {
        // Thin sets: fall back to feasible points found by LP.
        if let Some((c, _)) = p.chebyshev()? {
            out.push(c);
        }
    }
    Ok(out)
}

/// Half uniform points, half boundary points reached by ray shooting from
/// the Chebyshev center in random directions.
pub fn sample_boundary_biased(p: &HPolytope, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let Some((center, _)) = p.chebyshev()? else {
        return Ok(vec![]);
    };
    let mut out = sample_uniform(p, count / 2, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DIRECTION_SEED);
    let n = p.dim();
    while out.len() < count {
        let d = random_unit(n, &mut rng);
        let gd = p.g() * &d;
        let slack = p.f() - p.g() * &center;
        let t = (0..gd.len()).filter(|&i| gd[i] > 1e-12).map(|i| (slack[i] / gd[i]).max(0.0)).fold(f64::INFINITY, f64::min);
        let t = if t.is_finite() { t } else { 0.0 };
        out.push(&center + d * t);
    }
    Ok(out)
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let nv = v.norm();
        if nv > 1e-9 {
            return v / nv;
        }
    }
}

/// Deterministic direction set: axes first, then evenly spaced angles in
/// the plane or seeded random unit vectors in higher dimension.
fn directions(n: usize, count: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(count.max(2 * n));
    if n == 2 {
        for k in 0..count.max(4) {
            let t = std::f64::consts::TAU * k as f64 / count.max(4) as f64;
            out.push(Vector::from_row_slice(&[t.cos(), t.sin()]));
        }
        return out;
    }
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(n);
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
    while out.len() < count {
        out.push(random_unit(n, &mut rng));
    }
    out
}

/// `max_c |h_P(c) − h_Q(c)|` over `dirs` unit directions.
pub fn hausdorff(p: &HPolytope, q: &HPolytope, dirs: usize) -> Result<f64> {
    let (pe, qe) = (p.is_empty()?, q.is_empty()?);
    if pe && qe {
        return Ok(0.0);
    }
    if pe || qe {
        return Ok(f64::INFINITY);
    }
    let mut d = 0.0_f64;
    for c in directions(p.dim(), dirs) {
        d = d.max((p.support(&c)? - q.support(&c)?).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::Matrix;
    use crate::polytope::{MappedSet, MinkowskiSumChain};

    #[test]
    fn unit_square_volume() {
        let sq = HyperBox::new(Vector::zeros(2), Vector::from_element(2, 1.0)).unwrap().to_polytope();
        let v = mc_volume(&sq, 1_000_000, 1).unwrap();
        assert!((v - 1.0).abs() < 0.02);
        assert_eq!(mc_volume(&HPolytope::empty(2), 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn triangle_area() {
        let tri = HPolytope::new(Matrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]), Vector::from_row_slice(&[0.0, 0.0, 1.0]))
            .unwrap();
        let v = mc_volume(&tri, 1_000_000, 2).unwrap();
        assert!((v - 0.5).abs() < 0.5 * 0.02);
    }

    #[test]
    fn segment_has_zero_volume() {
        let seg = HPolytope::new(
            Matrix::from_row_slice(4, 2, &[1.0, -1.0, -1.0, 1.0, 1.0, 0.0, -1.0, 0.0]),
            Vector::from_row_slice(&[0.0, 0.0, 1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(mc_volume(&seg, 10_000, 3).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_cases() {
        let one = HyperBox::symmetric(2, 1.0).to_polytope();
        let two = HyperBox::symmetric(2, 2.0).to_polytope();
        assert_eq!(hausdorff(&one, &one, 16).unwrap(), 0.0);
        assert!((hausdorff(&one, &two, 4).unwrap() - 1.0).abs() < 1e-9);
        let mut d = MinkowskiSumChain::zero(2);
        d.push(MappedSet::new(Matrix::identity(2, 2), HyperBox::symmetric(2, 0.1).to_polytope()).unwrap()).unwrap();
        let eroded = one.erode(&d).unwrap();
        // Support gap along c is 0.1(|c₁|+|c₂|), maximal on the diagonal.
        let h = hausdorff(&one, &eroded, 10_000).unwrap();
        assert!((h - 0.1 * 2f64.sqrt()).abs() < 0.01 * 0.1 * 2f64.sqrt());
    }

    #[test]
    fn boundary_samples_stay_inside() {
        let b = HyperBox::symmetric(3, 1.0).to_polytope();
        let pts = sample_boundary_biased(&b, 200, 4).unwrap();
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|x| b.contains_point(x, 1e-9)));
        assert!(pts.iter().filter(|x| (x.amax() - 1.0).abs() < 1e-9).count() >= 100);
    }
}
