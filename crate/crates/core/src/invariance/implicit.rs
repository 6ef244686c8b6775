//! Closed-form implicit RCIS over `(x, v)`.

use sha2::{Digest, Sha256};

use super::LassoSpec;
use crate::error::{Error, Result};
use crate::numlin::{mat_powers, Matrix, Vector};
use crate::polytope::{project_with, HPolytope, MappedSet};
use crate::system::LinearSystem;
use crate::tol::Tolerances;

/// Implicit RCIS `C_xv ⊆ Rⁿ × R^d` for a nilpotent system.
#[derive(Debug, Clone)]
pub struct ImplicitRcis {
    pub polytope: HPolytope,
    pub spec: LassoSpec,
    pub nu: usize,
    pub n: usize,
    pub m: usize,
    /// SHA-256 of the system and safe-set data, hex encoded.
    pub fingerprint: String,
    pub empty: bool,
}

impl ImplicitRcis {
    /// `π_n(C_xv)` by a single projection.
    pub fn explicit(&self) -> Result<HPolytope> {
        self.explicit_with(&Tolerances::DEFAULT)
    }

    pub fn explicit_with(&self, tol: &Tolerances) -> Result<HPolytope> {
        if self.empty {
            return Ok(HPolytope::empty(self.n));
        }
        project_with(&self.polytope, self.n, tol)
    }

    pub fn dim_v(&self) -> usize {
        self.spec.dim_v()
    }

    /// The companion step `(x, v) ↦ (Ax + BHv + Ew, Pv)`.
    pub fn companion_step(&self, sys: &LinearSystem, x: &Vector, v: &Vector, w: &Vector) -> (Vector, Vector) {
        let u = self.spec.h() * v;
        (sys.step(x, &u, w), self.spec.p() * v)
    }

    pub fn contains(&self, x: &Vector, v: &Vector, slack: f64) -> bool {
        self.polytope.contains_point(&crate::numlin::vcat(x, v), slack)
    }
}

/// Unfiltered constraint rows: `ν+τ+λ` blocks of `rows(S_xu)` rows each.
///
/// Block `t` reads `G_x(Aᵗx + M_t v) + G_u H Pᵗ v ≤ f − h_{W̄_t}(G_x)` with
/// `M_t = Σ_{i=1..min(t,ν)} A^{i−1}BHP^{t−i}`; the state coefficient is
/// exactly zero once `t ≥ ν`.
pub fn closed_form_rows(sys: &LinearSystem, sxu: &HPolytope, spec: &LassoSpec) -> Result<(Matrix, Vector)> {
    let (n, m) = (sys.n(), sys.m());
    let nu = sys.nu().ok_or(Error::NotNilpotent(n))?;
    if sxu.dim() != n + m {
        return Err(Error::DimensionMismatch(format!("safe set in R^{} for n+m = {}", sxu.dim(), n + m)));
    }
    if spec.m() != m {
        return Err(Error::DimensionMismatch(format!("generator for {} inputs, system has {m}", spec.m())));
    }
    let d = spec.dim_v();
    let blocks = nu + spec.q();
    let gx = sxu.g().columns(0, n).into_owned();
    let gu = sxu.g().columns(n, m).into_owned();
    let k = sxu.nrows();

    let apow = mat_powers(sys.a(), nu);
    let ab: Vec<Matrix> = apow.iter().take(nu).map(|p| p * sys.b()).collect();
    let ppow = mat_powers(spec.p(), blocks);
    let hp: Vec<Matrix> = ppow.iter().map(|p| spec.h() * p).collect();
    let ew = MappedSet::new(sys.e().clone(), sys.w().clone())?;
    let disturbed = sys.has_disturbance();

    let mut g = Matrix::zeros(blocks * k, n + d);
    let mut f = Vector::zeros(blocks * k);
    let mut erosion = Vector::zeros(k);
    for t in 0..blocks {
        if t >= 1 && t <= nu && disturbed {
            for j in 0..k {
                let c = apow[t - 1].tr_mul(&gx.row(j).transpose());
                erosion[j] += ew.support(&c)?;
            }
        }
        let mut mt = Matrix::zeros(n, d);
        for i in 1..=t.min(nu) {
            mt += &ab[i - 1] * &hp[t - i];
        }
        let vcoef = &gx * mt + &gu * &hp[t];
        g.view_mut((t * k, n), (k, d)).copy_from(&vcoef);
        if t < nu {
            g.view_mut((t * k, 0), (k, n)).copy_from(&(&gx * &apow[t]));
        }
        f.rows_mut(t * k, k).copy_from(&(sxu.f() - &erosion));
    }
    Ok((g, f))
}

/// Closed-form implicit RCIS for a nilpotent system. Emptiness is flagged,
/// not raised.
pub fn implicit_rcis(sys: &LinearSystem, sxu: &HPolytope, spec: &LassoSpec) -> Result<ImplicitRcis> {
    let (g, f) = closed_form_rows(sys, sxu, spec)?;
    let polytope = HPolytope::new(g, f)?;
    let empty = polytope.is_empty()?;
    Ok(ImplicitRcis {
        polytope,
        spec: spec.clone(),
        nu: sys.nu().ok_or(Error::NotNilpotent(sys.n()))?,
        n: sys.n(),
        m: sys.m(),
        fingerprint: fingerprint(sys, sxu),
        empty,
    })
}

/// Projection of an implicit RCIS onto the state space.
pub fn explicit_rcis(ir: &ImplicitRcis) -> Result<HPolytope> {
    ir.explicit()
}

/// Hex SHA-256 over the little-endian bytes of `A, B, E, W, S_xu`.
pub fn fingerprint(sys: &LinearSystem, sxu: &HPolytope) -> String {
    let mut h = Sha256::new();
    let mut feed = |tag: &str, shape: (usize, usize), data: &[f64]| {
        h.update(tag.as_bytes());
        h.update((shape.0 as u64).to_le_bytes());
        h.update((shape.1 as u64).to_le_bytes());
        for v in data {
            // `+ 0.0` folds −0 into +0.
            h.update((v + 0.0).to_le_bytes());
        }
    };
    // Row-major so the digest matches the JSON layout.
    let rm = |m: &Matrix| m.transpose().as_slice().to_vec();
    feed("A", sys.a().shape(), &rm(sys.a()));
    feed("B", sys.b().shape(), &rm(sys.b()));
    feed("E", sys.e().shape(), &rm(sys.e()));
    feed("WG", sys.w().g().shape(), &rm(sys.w().g()));
    feed("Wf", (sys.w().nrows(), 1), sys.w().f().as_slice());
    feed("SG", sxu.g().shape(), &rm(sxu.g()));
    feed("Sf", (sxu.nrows(), 1), sxu.f().as_slice());
    hex::encode(h.finalize())
}
