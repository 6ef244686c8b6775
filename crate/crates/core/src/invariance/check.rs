//! Sampled robust controlled invariance test.

use crate::error::{Error, Result};
use crate::numlin::{solve_lp, vcat, LpOutcome, LpProblem, Matrix, Vector};
use crate::polytope::{sample_boundary_biased, HPolytope, MappedSet};
use crate::system::LinearSystem;

const CHECK_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Default)]
pub struct InvarianceReport {
    pub checked: usize,
    pub violations: usize,
    /// First sampled state without an admissible input.
    pub witness: Option<Vector>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Is there `u` with `(x,u) ∈ S_xu` and `Ax + Bu + EW ⊆ C`?
///
/// Robustness over `W` is imposed through `h_{EW}` on each row of `C`, which
/// is the same as requiring the condition at every vertex of `W`.
pub fn admits_input(sys: &LinearSystem, sxu: &HPolytope, c: &HPolytope, x: &Vector) -> Result<bool> {
    let (n, m) = (sys.n(), sys.m());
    if sxu.dim() != n + m || c.dim() != n || x.len() != n {
        return Err(Error::DimensionMismatch("invariance check dimensions".into()));
    }
    let gx = sxu.g().columns(0, n);
    let gu = sxu.g().columns(n, m).into_owned();
    let fs = sxu.f() - gx * x;
    let ew = MappedSet::new(sys.e().clone(), sys.w().clone())?;
    let mut fc = c.f() - c.g() * (sys.a() * x);
    if sys.has_disturbance() {
        for j in 0..c.nrows() {
            fc[j] -= ew.support(&c.g().row(j).transpose())?;
        }
    }
    let g = crate::numlin::vstack(&gu, &(c.g() * sys.b()));
    let scale = |v: &Vector, rows: &Matrix| Vector::from_fn(v.len(), |i, _| v[i] + CHECK_SLACK * (1.0 + rows.row(i).norm()));
    let f = vcat(&scale(&fs, &gu), &scale(&fc, &(c.g() * sys.b())));
    let lp = LpProblem::minimize(Vector::zeros(m), g, f)?;
    Ok(matches!(solve_lp(&lp)?, LpOutcome::Optimal { .. }))
}

/// Boundary-biased sampling of `C` with one LP per sample.
pub fn invariance_check(sys: &LinearSystem, sxu: &HPolytope, c: &HPolytope, samples: usize, seed: u64) -> Result<InvarianceReport> {
    let points = sample_boundary_biased(c, samples, seed)?;
    invariance_check_points(sys, sxu, c, &points)
}

pub fn invariance_check_points(sys: &LinearSystem, sxu: &HPolytope, c: &HPolytope, points: &[Vector]) -> Result<InvarianceReport> {
    let mut report = InvarianceReport::default();
    for x in points {
        report.checked += 1;
        if !admits_input(sys, sxu, c, x)? {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some(x.clone());
            }
        }
    }
    Ok(report)
}
