//! Level-`q` hierarchy of lasso implicit RCISs and its big-M lift.

use super::{implicit_rcis, ImplicitRcis, LassoSpec};
use crate::error::{Error, Result};
use crate::numlin::{Matrix, Vector};
use crate::polytope::{HPolytope, HyperBox};
use crate::system::LinearSystem;

const BIGM_MARGIN: f64 = 1.1;

/// Components over `Θ_q = {(τ, q−τ) | τ = 0..q−1}` and their union.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub q: usize,
    pub components: Vec<ImplicitRcis>,
    pub union: BigMUnion,
}

/// Polytope over `(x, v, ζ)` whose slices at `ζ = eᵢ` are the components.
#[derive(Debug, Clone)]
pub struct BigMUnion {
    /// Dimension of `(x, v)`.
    pub dim: usize,
    /// Per-row big-M values for each component; empty for empty components.
    pub big_m: Vec<Vector>,
    /// Lifted rows `Gᵢz + Mᵢζᵢ ≤ fᵢ + Mᵢ`, `Σζ = 1`, `0 ≤ ζ ≤ 1`.
    pub lifted: HPolytope,
    pub empty: Vec<bool>,
    /// Rows of `lifted` belonging to each component.
    ranges: Vec<std::ops::Range<usize>>,
}

/// `Θ_q` in increasing `τ`.
pub fn lasso_pairs(q: usize) -> Vec<(usize, usize)> {
    (0..q).map(|tau| (tau, q - tau)).collect()
}

pub fn hierarchy(sys: &LinearSystem, sxu: &HPolytope, q: usize) -> Result<Hierarchy> {
    if q == 0 {
        return Err(Error::InvalidLasso("hierarchy level must be at least 1".into()));
    }
    let components = lasso_pairs(q)
        .into_iter()
        .map(|(tau, lambda)| implicit_rcis(sys, sxu, &LassoSpec::lasso(tau, lambda, sys.m())?))
        .collect::<Result<Vec<_>>>()?;
    let union = BigMUnion::new(&components)?;
    Ok(Hierarchy { q, components, union })
}

impl BigMUnion {
    pub fn new(components: &[ImplicitRcis]) -> Result<Self> {
        let polys: Vec<&HPolytope> = components.iter().map(|c| &c.polytope).collect();
        let empty: Vec<bool> = components.iter().map(|c| c.empty).collect();
        Self::from_polytopes(&polys, &empty)
    }

    pub fn from_polytopes(components: &[&HPolytope], empty: &[bool]) -> Result<Self> {
        let k = components.len();
        let Some(first) = components.first() else {
            return Err(Error::DimensionMismatch("union of no sets".into()));
        };
        let dim = first.dim();
        if components.iter().any(|c| c.dim() != dim) || empty.len() != k {
            return Err(Error::DimensionMismatch("union components live in different spaces".into()));
        }
        let mut bbox: Option<HyperBox> = None;
        for (c, e) in components.iter().zip(empty) {
            if *e {
                continue;
            }
            let b = c.bounding_box()?.ok_or(Error::Infeasible)?;
            if b.lower.iter().chain(b.upper.iter()).any(|v| !v.is_finite()) {
                return Err(Error::UnboundedSet);
            }
            bbox = Some(match bbox {
                None => b,
                Some(acc) => HyperBox::new(acc.lower.inf(&b.lower), acc.upper.sup(&b.upper))?,
            });
        }

        let mut rows: Vec<(Vector, f64)> = Vec::new();
        let mut big_m = Vec::with_capacity(k);
        let mut ranges = Vec::with_capacity(k);
        for (i, (c, e)) in components.iter().zip(empty).enumerate() {
            let start = rows.len();
            if *e {
                // ζᵢ ≤ 0 keeps an empty component unselectable.
                let mut r = Vector::zeros(dim + k);
                r[dim + i] = 1.0;
                rows.push((r, 0.0));
                big_m.push(Vector::zeros(0));
                ranges.push(start..rows.len());
                continue;
            }
            let b = bbox.as_ref().expect("a nonempty component sets the box");
            let mi = Vector::from_fn(c.nrows(), |j, _| {
                let g = c.g().row(j).transpose();
                (b.support(&g) - c.f()[j]).max(0.0) * BIGM_MARGIN
            });
            for j in 0..c.nrows() {
                let mut r = Vector::zeros(dim + k);
                r.rows_mut(0, dim).copy_from(&c.g().row(j).transpose());
                r[dim + i] = mi[j];
                rows.push((r, c.f()[j] + mi[j]));
            }
            big_m.push(mi);
            ranges.push(start..rows.len());
        }
        for s in [1.0, -1.0] {
            let mut r = Vector::zeros(dim + k);
            r.rows_mut(dim, k).fill(s);
            rows.push((r, s));
        }
        for i in 0..k {
            for s in [1.0, -1.0] {
                let mut r = Vector::zeros(dim + k);
                r[dim + i] = s;
                rows.push((r, if s > 0.0 { 1.0 } else { 0.0 }));
            }
        }
        let g = Matrix::from_fn(rows.len(), dim + k, |r, c| rows[r].0[c]);
        let f = Vector::from_fn(rows.len(), |r, _| rows[r].1);
        Ok(Self { dim, big_m, lifted: HPolytope::new(g, f)?, empty: empty.to_vec(), ranges })
    }

    pub fn len(&self) -> usize {
        self.empty.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty.iter().all(|e| *e)
    }

    /// Largest big-M value over all rows.
    pub fn max_m(&self) -> f64 {
        self.big_m.iter().flat_map(|m| m.iter().copied()).fold(0.0, f64::max)
    }

    /// Index of the first component selected by some `ζ = eᵢ` that admits `z`.
    pub fn selecting(&self, z: &Vector, slack: f64) -> Option<usize> {
        let k = self.len();
        (0..k).find(|&i| {
            if self.empty[i] {
                return false;
            }
            let mut point = Vector::zeros(self.dim + k);
            point.rows_mut(0, self.dim).copy_from(z);
            point[self.dim + i] = 1.0;
            self.lifted.contains_point(&point, slack)
        })
    }

    /// Rows of the lifted polytope attached to component `i`.
    pub fn component_rows(&self, i: usize) -> std::ops::Range<usize> {
        self.ranges[i].clone()
    }
}

/// Membership of `(x, v)` in the union by enumerating `ζ ∈ {e₁, …, e_q}`.
pub fn member_bigm(bu: &BigMUnion, x: &Vector, v: &Vector) -> bool {
    let z = crate::numlin::vcat(x, v);
    z.len() == bu.dim && bu.selecting(&z, 1e-9).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn double_integrator() -> (LinearSystem, HPolytope) {
        let (sys, s) = crate::instances::double_integrator();
        let nil = sys.nilpotentize(&s).unwrap();
        (nil.system, nil.safe_set)
    }

    #[test]
    fn theta_sets() {
        assert_eq!(lasso_pairs(1), vec![(0, 1)]);
        assert_eq!(lasso_pairs(3), vec![(0, 3), (1, 2), (2, 1)]);
        let (sys, s) = double_integrator();
        let h = hierarchy(&sys, &s, 3).unwrap();
        assert_eq!(h.components.len(), 3);
        assert!(h.components.iter().all(|c| c.dim_v() == 3));
        assert!(hierarchy(&sys, &s, 0).is_err());
    }

    #[test]
    fn bigm_matches_components() {
        let (sys, s) = double_integrator();
        let h = hierarchy(&sys, &s, 3).unwrap();
        assert!(h.union.max_m() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut inside = 0;
        for _ in 0..3000 {
            let x = Vector::from_fn(2, |_, _| rng.random_range(-1.2..1.2));
            let v = Vector::from_fn(3, |_, _| rng.random_range(-0.15..0.15));
            let direct = h.components.iter().any(|c| c.contains(&x, &v, 1e-9));
            inside += direct as usize;
            assert_eq!(member_bigm(&h.union, &x, &v), direct);
        }
        assert!(inside > 0);
    }

    #[test]
    fn selects_the_right_component() {
        // Two disjoint intervals on the line.
        let a = HyperBox::new(Vector::from_element(1, 0.0), Vector::from_element(1, 1.0)).unwrap().to_polytope();
        let b = HyperBox::new(Vector::from_element(1, 3.0), Vector::from_element(1, 4.0)).unwrap().to_polytope();
        let e = HPolytope::empty(1);
        let u = BigMUnion::from_polytopes(&[&a, &b, &e], &[false, false, true]).unwrap();
        assert_eq!(u.selecting(&Vector::from_element(1, 3.5), 1e-9), Some(1));
        assert_eq!(u.selecting(&Vector::from_element(1, 0.5), 1e-9), Some(0));
        assert_eq!(u.selecting(&Vector::from_element(1, 2.0), 1e-9), None);
        assert_eq!(u.big_m[2].len(), 0);
        assert_eq!(u.component_rows(0).len(), 2);
        // Relaxation to the continuous hull still contains the point between.
        let mut z = Vector::zeros(4);
        z[0] = 2.0;
        z[1] = 0.5;
        z[2] = 0.5;
        assert!(u.lifted.contains_point(&z, 1e-9));
    }
}
