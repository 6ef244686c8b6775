//! H-representation polytopes `{x | Gx ≤ f}` and the set algebra built on
//! support functions: emptiness, containment, erosion, products, affine
//! preimages, projection, volume and Hausdorff estimates.

mod project;
mod sample;

pub use project::{project, project_with, remove_redundant};
pub use sample::{hausdorff, mc_volume, mc_volume_ratio, sample_boundary_biased, sample_uniform};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{ensure_finite_matrix, ensure_finite_vector, serde_mat, solve_lp, vstack, LpOutcome, LpProblem, Matrix, Vector};
use crate::tol::Tolerances;

const ZERO_ROW: f64 = 1e-12;

/// Convex polyhedron `{x ∈ Rⁿ | Gx ≤ f}`.
///
/// Boundedness is not enforced. Rows with a zero normal and a nonnegative
/// bound are dropped; a zero row with a negative bound collapses the set to
/// the canonical empty representation `0·x ≤ −1`. A polytope with no rows is
/// the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    g: Matrix,
    f: Vector,
}

impl HPolytope {
    pub fn new(g: Matrix, f: Vector) -> Result<Self> {
        if g.nrows() != f.len() {
            return Err(Error::DimensionMismatch(format!("{} rows in G but {} bounds", g.nrows(), f.len())));
        }
        ensure_finite_matrix(&g, "polytope G")?;
        ensure_finite_vector(&f, "polytope f")?;
        Ok(Self::from_parts_unchecked(g, f))
    }

    fn from_parts_unchecked(g: Matrix, f: Vector) -> Self {
        let n = g.ncols();
        let mut keep = Vec::with_capacity(g.nrows());
        for i in 0..g.nrows() {
            if g.row(i).amax() <= ZERO_ROW {
                if f[i] < -ZERO_ROW {
                    return Self::empty(n);
                }
            } else {
                keep.push(i);
            }
        }
        if keep.len() == g.nrows() {
            return Self { g, f };
        }
        Self { g: g.select_rows(&keep), f: f.select_rows(&keep) }
    }

    pub fn universe(n: usize) -> Self {
        Self { g: Matrix::zeros(0, n), f: Vector::zeros(0) }
    }

    pub fn empty(n: usize) -> Self {
        Self { g: Matrix::zeros(1, n), f: Vector::from_element(1, -1.0) }
    }

    pub fn from_box(lower: &Vector, upper: &Vector) -> Result<Self> {
        Ok(HyperBox::new(lower.clone(), upper.clone())?.to_polytope())
    }

    /// Singleton `{p}` as equality pairs.
    pub fn point(p: &Vector) -> Self {
        HyperBox { lower: p.clone(), upper: p.clone() }.to_polytope()
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn f(&self) -> &Vector {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.g.nrows()
    }

    /// True for the canonical empty representation produced by constructors.
    pub fn is_trivially_empty(&self) -> bool {
        self.g.nrows() == 1 && self.g.amax() == 0.0 && self.f[0] < 0.0
    }

    pub fn contains_point(&self, x: &Vector, slack: f64) -> bool {
        (&self.g * x - &self.f).iter().all(|v| *v <= slack)
    }

    /// Largest row violation `max(Gx − f)` after row normalization.
    pub fn violation(&self, x: &Vector) -> f64 {
        let r = &self.g * x - &self.f;
        r.iter().enumerate().map(|(i, v)| v / self.g.row(i).norm()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_empty(&self) -> Result<bool> {
        if self.is_trivially_empty() {
            return Ok(true);
        }
        if self.g.nrows() == 0 {
            return Ok(false);
        }
        let lp = LpProblem::minimize(Vector::zeros(self.dim()), self.g.clone(), self.f.clone())?;
        Ok(matches!(solve_lp(&lp)?, LpOutcome::Infeasible))
    }

    /// A feasible point, if any.
    pub fn any_point(&self) -> Result<Option<Vector>> {
        if self.is_trivially_empty() {
            return Ok(None);
        }
        if self.g.nrows() == 0 {
            return Ok(Some(Vector::zeros(self.dim())));
        }
        let lp = LpProblem::minimize(Vector::zeros(self.dim()), self.g.clone(), self.f.clone())?;
        Ok(solve_lp(&lp)?.point().cloned())
    }

    /// `h_P(c) = max ⟨c,x⟩`; `−∞` for the empty set.
    pub fn support(&self, c: &Vector) -> Result<f64> {
        Ok(self.support_point(c)?.map_or(f64::NEG_INFINITY, |(v, _)| v))
    }

    /// Support value with a maximizer, `None` when empty.
    pub fn support_point(&self, c: &Vector) -> Result<Option<(f64, Vector)>> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("direction of length {} for polytope in R^{}", c.len(), self.dim())));
        }
        if self.is_trivially_empty() {
            return Ok(None);
        }
        if c.amax() == 0.0 {
            return Ok(self.any_point()?.map(|p| (0.0, p)));
        }
        if self.g.nrows() == 0 {
            return Err(Error::Unbounded);
        }
        let lp = LpProblem::maximize(c.clone(), self.g.clone(), self.f.clone())?;
        match solve_lp(&lp)? {
            LpOutcome::Optimal { value, point } => Ok(Some((value, point))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }

    /// `self ⊇ other` with the default containment slack.
    pub fn contains(&self, other: &HPolytope) -> Result<bool> {
        self.contains_within(other, Tolerances::DEFAULT.contain)
    }

    /// `self ⊇ other`: every normalized row of `self` bounds `other` up to `slack`.
    pub fn contains_within(&self, other: &HPolytope, slack: f64) -> Result<bool> {
        check_dims(self, other)?;
        if other.is_empty()? {
            return Ok(true);
        }
        for i in 0..self.g.nrows() {
            let row = self.g.row(i).transpose();
            let norm = row.norm();
            let h = match other.support(&row) {
                Ok(h) => h,
                Err(Error::Unbounded) => return Ok(false),
                Err(e) => return Err(e),
            };
            if (h - self.f[i]) / norm > slack {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Mutual containment.
    pub fn set_eq(&self, other: &HPolytope, slack: f64) -> Result<bool> {
        Ok(self.contains_within(other, slack)? && other.contains_within(self, slack)?)
    }

    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope> {
        check_dims(self, other)?;
        Ok(Self::from_parts_unchecked(vstack(&self.g, &other.g), crate::numlin::vcat(&self.f, &other.f)))
    }

    /// `{x | Gx ≤ f − h}` with `h_j = h_D(row_j)`.
    pub fn erode(&self, d: &MinkowskiSumChain) -> Result<HPolytope> {
        if d.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("eroding R^{} polytope by R^{} set", self.dim(), d.dim())));
        }
        if d.is_zero() {
            return Ok(self.clone());
        }
        let mut f = self.f.clone();
        for i in 0..self.g.nrows() {
            f[i] -= d.support(&self.g.row(i).transpose())?;
        }
        Ok(Self::from_parts_unchecked(self.g.clone(), f))
    }

    /// `self × other` as a block-diagonal stack.
    pub fn cartesian(&self, other: &HPolytope) -> HPolytope {
        let g = crate::numlin::blkdiag(&[&self.g, &other.g]);
        let f = crate::numlin::vcat(&self.f, &other.f);
        Self::from_parts_unchecked(g, f)
    }

    /// `{z | G(Mz + t) ≤ f}`.
    pub fn affine_preimage(&self, m: &Matrix, t: &Vector) -> Result<HPolytope> {
        if m.nrows() != self.dim() || t.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("map {:?} with offset {} into R^{}", m.shape(), t.len(), self.dim())));
        }
        let g = &self.g * m;
        let f = &self.f - &self.g * t;
        if self.is_trivially_empty() {
            return Ok(Self::empty(m.ncols()));
        }
        Ok(Self::from_parts_unchecked(g, f))
    }

    /// Tight axis-aligned bounding box via `2n` support queries.
    pub fn bounding_box(&self) -> Result<Option<HyperBox>> {
        if self.is_empty()? {
            return Ok(None);
        }
        let n = self.dim();
        let mut lower = Vector::zeros(n);
        let mut upper = Vector::zeros(n);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            upper[i] = self.support(&e)?;
            e[i] = -1.0;
            lower[i] = -self.support(&e)?;
        }
        // Guard against LP noise crossing the bounds.
        for i in 0..n {
            if lower[i] > upper[i] {
                let mid = 0.5 * (lower[i] + upper[i]);
                lower[i] = mid;
                upper[i] = mid;
            }
        }
        Ok(Some(HyperBox { lower, upper }))
    }

    pub fn is_bounded(&self) -> Result<bool> {
        match self.bounding_box() {
            Ok(_) => Ok(true),
            Err(Error::Unbounded) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Center and radius of the largest inscribed ball, `None` when empty.
    pub fn chebyshev(&self) -> Result<Option<(Vector, f64)>> {
        if self.is_trivially_empty() {
            return Ok(None);
        }
        let n = self.dim();
        let k = self.g.nrows();
        let mut g = Matrix::zeros(k + 1, n + 1);
        g.view_mut((0, 0), (k, n)).copy_from(&self.g);
        for i in 0..k {
            g[(i, n)] = self.g.row(i).norm();
        }
        g[(k, n)] = -1.0;
        let mut f = Vector::zeros(k + 1);
        f.rows_mut(0, k).copy_from(&self.f);
        let mut c = Vector::zeros(n + 1);
        c[n] = 1.0;
        // Cap the radius so unbounded sets still return a center.
        let mut g2 = Matrix::zeros(k + 2, n + 1);
        g2.view_mut((0, 0), (k + 1, n + 1)).copy_from(&g);
        g2[(k + 1, n)] = 1.0;
        let mut f2 = Vector::zeros(k + 2);
        f2.rows_mut(0, k + 1).copy_from(&f);
        f2[k + 1] = 1e6;
        match solve_lp(&LpProblem::maximize(c, g2, f2)?)? {
            LpOutcome::Optimal { point, .. } => Ok(Some((point.rows(0, n).into_owned(), point[n]))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }

    /// Vertices by brute-force enumeration of `dim`-row subsets.
    ///
    /// Axis-aligned boxes take a direct path. `limit` bounds the vertex count.
    pub fn vertices(&self, limit: usize) -> Result<Vec<Vector>> {
        if let Some(b) = self.as_box() {
            return b.vertices(limit);
        }
        if self.is_empty()? {
            return Ok(vec![]);
        }
        let n = self.dim();
        let k = self.g.nrows();
        if n == 0 {
            return Ok(vec![Vector::zeros(0)]);
        }
        let mut out: Vec<Vector> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        if k < n {
            return Err(Error::UnboundedSet);
        }
        loop {
            let sub = self.g.select_rows(&idx);
            let rhs = self.f.select_rows(&idx);
            if let Some(x) = sub.lu().solve(&rhs) {
                if x.iter().all(|v| v.is_finite()) && self.violation(&x) <= 1e-9 && !out.iter().any(|v| (v - &x).amax() <= 1e-9) {
                    out.push(x);
                    if out.len() > limit {
                        return Err(Error::VertexEnumerationTooLarge(out.len()));
                    }
                }
            }
            // Next combination in lexicographic order.
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if idx[i] < k - n + i {
                    idx[i] += 1;
                    for j in i + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Recognizes `{lo ≤ x ≤ hi}` written with signed unit rows only.
    pub fn as_box(&self) -> Option<HyperBox> {
        let n = self.dim();
        let mut lower = Vector::from_element(n, f64::NEG_INFINITY);
        let mut upper = Vector::from_element(n, f64::INFINITY);
        for i in 0..self.g.nrows() {
            let row = self.g.row(i);
            let mut nz = row.iter().enumerate().filter(|(_, v)| **v != 0.0);
            let (j, &a) = nz.next()?;
            if nz.next().is_some() {
                return None;
            }
            let b = self.f[i] / a;
            if a > 0.0 {
                upper[j] = upper[j].min(b);
            } else {
                lower[j] = lower[j].max(b);
            }
        }
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        if (0..n).any(|j| lower[j] > upper[j]) {
            return None;
        }
        Some(HyperBox { lower, upper })
    }

    /// Rows scaled to unit normals.
    pub fn normalized(&self) -> HPolytope {
        let mut g = self.g.clone();
        let mut f = self.f.clone();
        for i in 0..g.nrows() {
            let nr = g.row(i).norm();
            if nr > 0.0 {
                g.row_mut(i).scale_mut(1.0 / nr);
                f[i] /= nr;
            }
        }
        Self { g, f }
    }

    /// Diameter surrogate `max_i (h(e_i) + h(−e_i))`, the largest box width.
    pub fn max_width(&self) -> Result<f64> {
        Ok(match self.bounding_box()? {
            Some(b) => (&b.upper - &b.lower).max(),
            None => 0.0,
        })
    }
}

fn check_dims(a: &HPolytope, b: &HPolytope) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("R^{} vs R^{}", a.dim(), b.dim())));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct HPolytopeRepr {
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    f: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl Serialize for HPolytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HPolytopeRepr {
            g: serde_mat::to_rows(&self.g),
            f: self.f.iter().copied().collect(),
            n: (self.g.nrows() == 0).then_some(self.dim()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HPolytope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = HPolytopeRepr::deserialize(d)?;
        let g = serde_mat::from_rows(&r.g, r.n.unwrap_or(0)).map_err(D::Error::custom)?;
        if let Some(n) = r.n {
            if g.ncols() != n {
                return Err(D::Error::custom("polytope column count disagrees with n"));
            }
        }
        HPolytope::new(g, Vector::from_vec(r.f)).map_err(D::Error::custom)
    }
}

/// Axis-aligned box `{x | lower ≤ x ≤ upper}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    #[serde(with = "crate::numlin::serde_vec")]
    pub lower: Vector,
    #[serde(with = "crate::numlin::serde_vec")]
    pub upper: Vector,
}

impl HyperBox {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch("box bounds differ in length".into()));
        }
        ensure_finite_vector(&lower, "box lower bound")?;
        ensure_finite_vector(&upper, "box upper bound")?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::DimensionMismatch("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[−r, r]ⁿ`.
    pub fn symmetric(n: usize, r: f64) -> Self {
        Self { lower: Vector::from_element(n, -r), upper: Vector::from_element(n, r) }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn widths(&self) -> Vector {
        &self.upper - &self.lower
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn center(&self) -> Vector {
        (&self.upper + &self.lower) * 0.5
    }

    pub fn support(&self, c: &Vector) -> f64 {
        c.iter().enumerate().map(|(i, ci)| if *ci >= 0.0 { ci * self.upper[i] } else { ci * self.lower[i] }).sum()
    }

    pub fn contains_point(&self, x: &Vector, slack: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower[i] - slack && x[i] <= self.upper[i] + slack)
    }

    pub fn to_polytope(&self) -> HPolytope {
        let n = self.dim();
        let mut g = Matrix::zeros(2 * n, n);
        let mut f = Vector::zeros(2 * n);
        for i in 0..n {
            g[(2 * i, i)] = 1.0;
            f[2 * i] = self.upper[i];
            g[(2 * i + 1, i)] = -1.0;
            f[2 * i + 1] = -self.lower[i];
        }
        HPolytope { g, f }
    }

    /// Corners, collapsing zero-width coordinates.
    pub fn vertices(&self, limit: usize) -> Result<Vec<Vector>> {
        let free: Vec<usize> = (0..self.dim()).filter(|&i| self.upper[i] > self.lower[i]).collect();
        if free.len() >= usize::BITS as usize - 1 || (1usize << free.len()) > limit {
            return Err(Error::VertexEnumerationTooLarge(1usize.checked_shl(free.len() as u32).unwrap_or(usize::MAX)));
        }
        let mut out = Vec::with_capacity(1 << free.len());
        for mask in 0..(1usize << free.len()) {
            let mut v = self.lower.clone();
            for (bit, &i) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    v[i] = self.upper[i];
                }
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// One summand `M·W` of a formal Minkowski sum.
#[derive(Debug, Clone)]
pub struct MappedSet {
    pub map: Matrix,
    pub set: HPolytope,
    boxed: Option<HyperBox>,
}

impl MappedSet {
    pub fn new(map: Matrix, set: HPolytope) -> Result<Self> {
        if map.ncols() != set.dim() {
            return Err(Error::DimensionMismatch(format!("map {:?} applied to R^{} set", map.shape(), set.dim())));
        }
        let boxed = set.as_box();
        Ok(Self { map, set, boxed })
    }

    pub fn support(&self, c: &Vector) -> Result<f64> {
        let d = self.map.tr_mul(c);
        if d.amax() == 0.0 {
            return Ok(0.0);
        }
        match &self.boxed {
            Some(b) => Ok(b.support(&d)),
            None => self.set.support(&d),
        }
    }

    fn is_zero(&self) -> bool {
        self.map.amax() == 0.0 || self.boxed.as_ref().is_some_and(|b| b.lower.amax() == 0.0 && b.upper.amax() == 0.0)
    }
}

/// Formal sum `Σ Mᵢ·Wᵢ`, evaluated only through its support function.
#[derive(Debug, Clone)]
pub struct MinkowskiSumChain {
    dim: usize,
    terms: Vec<MappedSet>,
}

impl MinkowskiSumChain {
    /// The singleton `{0}` in `Rⁿ`.
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: vec![] }
    }

    pub fn push(&mut self, term: MappedSet) -> Result<()> {
        if term.map.nrows() != self.dim {
            return Err(Error::DimensionMismatch("summand maps into the wrong space".into()));
        }
        if !term.is_zero() {
            self.terms.push(term);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[MappedSet] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self, c: &Vector) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.support(c)?;
        }
        Ok(s)
    }

    /// The chain embedded in a larger space by appending zero rows: `D × {0}`.
    pub fn pad(&self, extra: usize) -> MinkowskiSumChain {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut map = Matrix::zeros(self.dim + extra, t.map.ncols());
                map.view_mut((0, 0), t.map.shape()).copy_from(&t.map);
                MappedSet { map, set: t.set.clone(), boxed: t.boxed.clone() }
            })
            .collect();
        MinkowskiSumChain { dim: self.dim + extra, terms }
    }

    /// Image under a linear map `L`: `Σ (L Mᵢ)·Wᵢ`.
    pub fn mapped(&self, l: &Matrix) -> MinkowskiSumChain {
        let terms = self.terms.iter().map(|t| MappedSet { map: l * &t.map, set: t.set.clone(), boxed: t.boxed.clone() }).collect();
        MinkowskiSumChain { dim: l.nrows(), terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(n: usize) -> HPolytope {
        HyperBox::symmetric(n, 1.0).to_polytope()
    }

    #[test]
    fn contradictory_interval_is_empty() {
        let p = HPolytope::new(Matrix::from_row_slice(2, 1, &[1.0, -1.0]), Vector::from_row_slice(&[-1.0, -1.0])).unwrap();
        assert!(p.is_empty().unwrap());
        assert!(!unit_box(2).is_empty().unwrap());
    }

    #[test]
    fn box_intersections_match_intervals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let lo1 = Vector::from_fn(4, |_, _| rng.random_range(-1.0..0.0));
            let hi1 = &lo1 + Vector::from_fn(4, |_, _| rng.random_range(0.1..1.0));
            let shift = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let lo2 = &lo1 + &shift;
            let hi2 = &hi1 + &shift;
            let p = HPolytope::from_box(&lo1, &hi1).unwrap();
            let q = HPolytope::from_box(&lo2, &hi2).unwrap();
            let oracle = (0..4).all(|i| lo1[i].max(lo2[i]) <= hi1[i].min(hi2[i]));
            assert_eq!(!p.intersect(&q).unwrap().is_empty().unwrap(), oracle);
        }
    }

    #[test]
    fn supports() {
        let b = unit_box(2);
        assert!((b.support(&Vector::from_row_slice(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(b.support(&Vector::zeros(2)).unwrap(), 0.0);
        let simplex =
            HPolytope::new(Matrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]), Vector::from_row_slice(&[0.0, 0.0, 1.0]))
                .unwrap();
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let oracle = verts.iter().map(|v| v[0] + v[1]).fold(f64::MIN, f64::max);
        let h = simplex.support(&Vector::from_row_slice(&[1.0, 1.0])).unwrap();
        assert!((h - oracle).abs() < 1e-9);
    }

    #[test]
    fn unbounded_support() {
        let half = HPolytope::new(Matrix::from_row_slice(1, 2, &[1.0, 0.0]), Vector::from_element(1, 1.0)).unwrap();
        assert_eq!(half.support(&Vector::from_row_slice(&[0.0, 1.0])), Err(Error::Unbounded));
        assert!(!half.is_bounded().unwrap());
    }

    #[test]
    fn box_erosion() {
        let w = MappedSet::new(Matrix::identity(2, 2), HyperBox::symmetric(2, 0.1).to_polytope()).unwrap();
        let mut d = MinkowskiSumChain::zero(2);
        d.push(w).unwrap();
        let e = unit_box(2).erode(&d).unwrap();
        assert!(e.set_eq(&HyperBox::symmetric(2, 0.9).to_polytope(), 1e-9).unwrap());
        assert_eq!(unit_box(2).erode(&MinkowskiSumChain::zero(2)).unwrap(), unit_box(2));
    }

    #[test]
    fn chained_erosion_matches_vertex_sum() {
        let w = HyperBox::symmetric(2, 0.1).to_polytope();
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let mut d = MinkowskiSumChain::zero(2);
        d.push(MappedSet::new(Matrix::identity(2, 2), w.clone()).unwrap()).unwrap();
        d.push(MappedSet::new(a.clone(), w.clone()).unwrap()).unwrap();
        // Brute-force vertex sums of W + A·W give the summed set's supports.
        let wv = w.vertices(16).unwrap();
        let sums: Vec<Vector> = wv.iter().flat_map(|p| wv.iter().map(|q| p + &a * q).collect::<Vec<_>>()).collect();
        let h = |c: &Vector| sums.iter().map(|s| s.dot(c)).fold(f64::MIN, f64::max);
        let e = unit_box(2).erode(&d).unwrap();
        let expected = HPolytope::from_box(
            &Vector::from_row_slice(&[-1.0 + h(&Vector::from_row_slice(&[-1.0, 0.0])), -1.0 + h(&Vector::from_row_slice(&[0.0, -1.0]))]),
            &Vector::from_row_slice(&[1.0 - h(&Vector::from_row_slice(&[1.0, 0.0])), 1.0 - h(&Vector::from_row_slice(&[0.0, 1.0]))]),
        )
        .unwrap();
        assert!(e.set_eq(&expected, 1e-9).unwrap());
        let target = HyperBox::new(Vector::from_row_slice(&[-0.8, -0.9]), Vector::from_row_slice(&[0.8, 0.9])).unwrap();
        assert!(e.set_eq(&target.to_polytope(), 1e-9).unwrap());
    }

    #[test]
    fn cartesian_products() {
        let i = HyperBox::new(Vector::zeros(1), Vector::from_element(1, 1.0)).unwrap().to_polytope();
        let sq = i.cartesian(&i);
        let unit_sq = HyperBox::new(Vector::zeros(2), Vector::from_element(2, 1.0)).unwrap().to_polytope();
        assert!(sq.set_eq(&unit_sq, 1e-9).unwrap());
        let with_zero = i.cartesian(&HPolytope::point(&Vector::zeros(1)));
        assert_eq!(with_zero.nrows(), 4);
        assert!(with_zero.contains_point(&Vector::from_row_slice(&[0.5, 0.0]), 0.0));
        assert!(!with_zero.contains_point(&Vector::from_row_slice(&[0.5, 0.1]), 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let a = rng.random_range(1..5);
            let b = rng.random_range(1..5);
            assert_eq!(unit_box(a).cartesian(&unit_box(b)).dim(), a + b);
        }
    }

    #[test]
    fn affine_preimage_cases() {
        let b = unit_box(2);
        assert_eq!(b.affine_preimage(&Matrix::identity(2, 2), &Vector::zeros(2)).unwrap(), b);
        let zero = Matrix::zeros(2, 3);
        let inside = b.affine_preimage(&zero, &Vector::from_row_slice(&[0.5, 0.5])).unwrap();
        assert_eq!(inside.nrows(), 0);
        let outside = b.affine_preimage(&zero, &Vector::from_row_slice(&[2.0, 0.0])).unwrap();
        assert!(outside.is_trivially_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Matrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let t = Vector::from_fn(2, |_, _| rng.random_range(-0.5..0.5));
        let pre = b.affine_preimage(&m, &t).unwrap();
        for _ in 0..10_000 {
            let z = Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            assert_eq!(pre.contains_point(&z, 0.0), b.contains_point(&(&m * &z + &t), 0.0));
        }
    }

    #[test]
    fn containment_basics() {
        let b = unit_box(2);
        assert!(b.contains(&b).unwrap());
        let small = HyperBox::symmetric(2, 0.9).to_polytope();
        assert!(b.contains(&small).unwrap());
        assert!(!small.contains(&b).unwrap());
        assert!(small.contains(&HPolytope::empty(2)).unwrap());
    }

    #[test]
    fn vertex_enumeration_of_triangle() {
        let tri = HPolytope::new(Matrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]), Vector::from_row_slice(&[0.0, 0.0, 1.0]))
            .unwrap();
        assert_eq!(tri.vertices(10).unwrap().len(), 3);
        assert_eq!(unit_box(3).vertices(100).unwrap().len(), 8);
        assert!(matches!(unit_box(13).vertices(4096), Err(Error::VertexEnumerationTooLarge(_))));
        assert_eq!(HPolytope::point(&Vector::zeros(3)).vertices(4).unwrap().len(), 1);
    }

    #[test]
    fn serde_round_trip() {
        let b = unit_box(2);
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"G\""));
        let back: HPolytope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        let u = HPolytope::universe(3);
        let back: HPolytope = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        assert_eq!(back.dim(), 3);
    }

    #[test]
    fn zero_rows_dropped() {
        let p = HPolytope::new(Matrix::from_row_slice(2, 1, &[0.0, 1.0]), Vector::from_row_slice(&[3.0, 1.0])).unwrap();
        assert_eq!(p.nrows(), 1);
        let q = HPolytope::new(Matrix::from_row_slice(2, 1, &[0.0, 1.0]), Vector::from_row_slice(&[-3.0, 1.0])).unwrap();
        assert!(q.is_trivially_empty());
    }
}
