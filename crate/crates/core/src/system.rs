//! Discrete-time linear systems `x⁺ = Ax + Bu + Ew`, deadbeat pre-feedback,
//! accumulated disturbance sets and reachable sets.

use crate::error::{Error, Result};
use crate::numlin::{ensure_finite_matrix, mat_power, mat_powers, norm_inf, rank, Matrix, Vector};
use crate::polytope::{HPolytope, MappedSet, MinkowskiSumChain};
use crate::tol::Tolerances;

/// Time horizon for disturbance accumulation; `Infinite` truncates at ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: Matrix,
    b: Matrix,
    e: Matrix,
    w: HPolytope,
    nu: Option<usize>,
    k: Option<Matrix>,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix, e: Matrix, w: HPolytope) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || e.nrows() != n || e.ncols() != w.dim() {
            return Err(Error::DimensionMismatch(format!("A {:?}, B {:?}, E {:?}, W in R^{}", a.shape(), b.shape(), e.shape(), w.dim())));
        }
        ensure_finite_matrix(&a, "A")?;
        ensure_finite_matrix(&b, "B")?;
        ensure_finite_matrix(&e, "E")?;
        if w.is_empty()? {
            return Err(Error::DimensionMismatch("disturbance set W is empty".into()));
        }
        if !w.is_bounded()? {
            return Err(Error::UnboundedSet);
        }
        let nu = nilpotent_index(&a, Tolerances::DEFAULT.nilpotent);
        Ok(Self { a, b, e, w, nu, k: None })
    }

    /// Disturbance-free system: `E = 0 ∈ R^{n×1}`, `W = {0}`.
    pub fn nominal(a: Matrix, b: Matrix) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, b, Matrix::zeros(n, 1), HPolytope::point(&Vector::zeros(1)))
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn w(&self) -> &HPolytope {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Nilpotency index of `A`, if nilpotent.
    pub fn nu(&self) -> Option<usize> {
        self.nu
    }

    /// Pre-feedback gain applied by [`LinearSystem::nilpotentize`].
    pub fn gain(&self) -> Option<&Matrix> {
        self.k.as_ref()
    }

    pub fn has_disturbance(&self) -> bool {
        self.e.amax() > 0.0 && self.w.as_box().is_none_or(|b| b.lower.amax() > 0.0 || b.upper.amax() > 0.0)
    }

    /// The same dynamics without disturbance.
    pub fn without_disturbance(&self) -> Self {
        let n = self.n();
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            e: Matrix::zeros(n, 1),
            w: HPolytope::point(&Vector::zeros(1)),
            nu: self.nu,
            k: self.k.clone(),
        }
    }

    /// Same system with `E·W` replaced.
    pub fn with_disturbance(&self, e: Matrix, w: HPolytope) -> Result<Self> {
        let mut s = Self::new(self.a.clone(), self.b.clone(), e, w)?;
        s.k = self.k.clone();
        Ok(s)
    }

    pub fn step(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        &self.a * x + &self.b * u + &self.e * w
    }

    pub fn controllability_rank(&self, tol: f64) -> usize {
        let n = self.n();
        let m = self.m();
        let mut c = Matrix::zeros(n, n * m);
        let mut blk = self.b.clone();
        for k in 0..n {
            c.view_mut((0, k * m), (n, m)).copy_from(&blk);
            blk = &self.a * blk;
        }
        rank(&c, tol)
    }

    /// Deadbeat feedback `K` making `A + BK` nilpotent with index equal to
    /// the largest controllability index.
    ///
    /// Returns the transformed system `x⁺ = (A+BK)x + Bu′ + Ew` and the safe
    /// set in `(x, u′)` coordinates, `{(x,u′) | (x, Kx+u′) ∈ S_xu}`.
    pub fn nilpotentize(&self, sxu: &HPolytope) -> Result<Nilpotentized> {
        self.nilpotentize_with(sxu, &Tolerances::DEFAULT)
    }

    pub fn nilpotentize_with(&self, sxu: &HPolytope, tol: &Tolerances) -> Result<Nilpotentized> {
        let (n, m) = (self.n(), self.m());
        if sxu.dim() != n + m {
            return Err(Error::DimensionMismatch(format!("safe set in R^{} for system with n+m = {}", sxu.dim(), n + m)));
        }
        let k = if nilpotent_index(&self.a, tol.nilpotent).is_some() { Matrix::zeros(m, n) } else { deadbeat_gain(&self.a, &self.b, tol)? };
        let acl = &self.a + &self.b * &k;
        let nu = nilpotent_index(&acl, tol.nilpotent).ok_or(Error::NotNilpotent(n))?;
        let mut map = Matrix::identity(n + m, n + m);
        map.view_mut((n, 0), (m, n)).copy_from(&k);
        let safe_set = sxu.affine_preimage(&map, &Vector::zeros(n + m))?;
        let system = Self { a: acl, b: self.b.clone(), e: self.e.clone(), w: self.w.clone(), nu: Some(nu), k: Some(k.clone()) };
        Ok(Nilpotentized { system, safe_set, gain: k })
    }

    /// `W̄_t = Σ_{i=1..min(t,ν)} A^{i−1}E·W` as a formal sum.
    pub fn acc_disturbance(&self, t: Horizon) -> Result<MinkowskiSumChain> {
        let terms = match t {
            Horizon::Finite(t) => self.nu.map_or(t, |nu| t.min(nu)),
            Horizon::Infinite => self.nu.ok_or(Error::NotNilpotent(self.n()))?,
        };
        let mut chain = MinkowskiSumChain::zero(self.n());
        if !self.has_disturbance() {
            return Ok(chain);
        }
        for p in mat_powers(&self.a, terms.saturating_sub(1)).iter().take(terms) {
            chain.push(MappedSet::new(p * &self.e, self.w.clone())?)?;
        }
        Ok(chain)
    }

    /// `AᵗX + Σ A^{i−1}Bu_{t−i} + W̄_t` with `t = inputs.len()`.
    pub fn reach_set(&self, x: &HPolytope, inputs: &[Vector]) -> Result<ReachSet> {
        if x.dim() != self.n() {
            return Err(Error::DimensionMismatch("initial set dimension".into()));
        }
        let t = inputs.len();
        let mut offset = Vector::zeros(self.n());
        for u in inputs {
            if u.len() != self.m() {
                return Err(Error::DimensionMismatch("input dimension".into()));
            }
            offset = &self.a * offset + &self.b * u;
        }
        // Disturbance accumulates over every step, not only up to ν.
        let mut chain = MinkowskiSumChain::zero(self.n());
        if self.has_disturbance() {
            for p in mat_powers(&self.a, t.saturating_sub(1)).iter().take(t) {
                chain.push(MappedSet::new(p * &self.e, self.w.clone())?)?;
            }
        }
        Ok(ReachSet { map: mat_power(&self.a, t), offset, initial: x.clone(), disturbance: chain })
    }
}

#[derive(Debug, Clone)]
pub struct Nilpotentized {
    pub system: LinearSystem,
    pub safe_set: HPolytope,
    pub gain: Matrix,
}

/// Affine image of a polytope plus a formal disturbance sum.
#[derive(Debug, Clone)]
pub struct ReachSet {
    pub map: Matrix,
    pub offset: Vector,
    pub initial: HPolytope,
    pub disturbance: MinkowskiSumChain,
}

impl ReachSet {
    pub fn support(&self, c: &Vector) -> Result<f64> {
        let mc = self.map.tr_mul(c);
        let hx = if mc.amax() == 0.0 { 0.0 } else { self.initial.support(&mc)? };
        Ok(hx + c.dot(&self.offset) + self.disturbance.support(c)?)
    }
}

/// Smallest `k ≤ n` with `‖A^k‖_∞ ≤ tol·(1+‖A‖_∞)^k`.
pub fn nilpotent_index(a: &Matrix, tol: f64) -> Option<usize> {
    let n = a.nrows();
    let scale = 1.0 + norm_inf(a);
    let mut p = Matrix::identity(n, n);
    for k in 0..=n {
        if norm_inf(&p) <= tol * scale.powi(k as i32) {
            return Some(k);
        }
        p = &p * a;
    }
    None
}

/// Luenberger controller-form construction of a deadbeat gain.
fn deadbeat_gain(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let (n, m) = (a.nrows(), b.ncols());
    let mut chains: Vec<Vec<Vector>> = vec![Vec::new(); m];
    let mut open = vec![true; m];
    let mut selected = Matrix::zeros(n, 0);
    let mut current: Vec<Vector> = (0..m).map(|i| b.column(i).into_owned()).collect();
    let scale = 1.0 + norm_inf(a).max(norm_inf(b));
    'outer: for _ in 0..n {
        for i in 0..m {
            if !open[i] {
                continue;
            }
            let cand = selected.clone().insert_column(selected.ncols(), 0.0);
            let mut cand = cand;
            cand.set_column(selected.ncols(), &current[i]);
            let r = rank(&cand, tol.rank);
            let independent = r > selected.ncols() && current[i].amax() > tol.rank * scale;
            if independent {
                chains[i].push(current[i].clone());
                selected = cand;
                current[i] = a * &current[i];
                if selected.ncols() == n {
                    break 'outer;
                }
            } else {
                open[i] = false;
            }
        }
        if open.iter().all(|o| !o) {
            break;
        }
    }
    if selected.ncols() < n {
        return Err(Error::NotControllable { rank: selected.ncols(), n });
    }

    // Columns of C grouped by chain.
    let mut c = Matrix::zeros(n, n);
    let mut col = 0;
    let mut sigma = Vec::new();
    for ch in &chains {
        for v in ch {
            c.set_column(col, v);
            col += 1;
        }
        if !ch.is_empty() {
            sigma.push(col - 1);
        }
    }
    let c_inv = c.try_inverse().ok_or_else(|| Error::NumericalFailure("chain matrix singular".into()))?;
    let lens: Vec<usize> = chains.iter().map(|ch| ch.len()).filter(|l| *l > 0).collect();
    let mm = sigma.len();
    let mut gamma = Matrix::zeros(mm, m);
    let mut r = Matrix::zeros(mm, n);
    for (k, (&s, &mu)) in sigma.iter().zip(&lens).enumerate() {
        let q = c_inv.row(s).into_owned();
        let qa = &q * mat_power(a, mu - 1);
        gamma.set_row(k, &(&qa * b));
        r.set_row(k, &(&qa * a));
    }
    // Γ has full row rank; the minimum-norm solution of ΓK = −R.
    let ggt = &gamma * gamma.transpose();
    let inv = ggt.try_inverse().ok_or_else(|| Error::NumericalFailure("singular Γ".into()))?;
    Ok(-(gamma.transpose() * inv * r))
}
