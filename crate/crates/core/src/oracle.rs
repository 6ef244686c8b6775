//! Classical backward iteration for the maximal RCIS, the nominal problem,
//! the outer bound `C_outer,ν`, weak completeness and convergence checks.

use crate::error::{Error, Result};
use crate::invariance::{implicit_rcis, LassoSpec};
use crate::numlin::{mat_powers, solve_lp, LpOutcome, LpProblem, Matrix, Vector};
use crate::polytope::{hausdorff, project_with, remove_redundant, HPolytope, MappedSet};
use crate::system::{Horizon, LinearSystem};
use crate::tol::Tolerances;

pub const DEFAULT_MAX_ITERS: usize = 200;
const HAUSDORFF_DIRS: usize = 720;

/// One-step robust predecessor within the safe set:
/// `{x | ∃u: (x,u) ∈ S_xu, Ax + Bu + EW ⊆ C}`.
pub fn pre(sys: &LinearSystem, sxu: &HPolytope, c: &HPolytope) -> Result<HPolytope> {
    pre_with(sys, sxu, c, &Tolerances::DEFAULT)
}

pub fn pre_with(sys: &LinearSystem, sxu: &HPolytope, c: &HPolytope, tol: &Tolerances) -> Result<HPolytope> {
    let (n, m) = (sys.n(), sys.m());
    if sxu.dim() != n + m || c.dim() != n {
        return Err(Error::DimensionMismatch("pre-image dimensions".into()));
    }
    if c.is_trivially_empty() {
        return Ok(HPolytope::empty(n));
    }
    let ew = MappedSet::new(sys.e().clone(), sys.w().clone())?;
    let mut f = c.f().clone();
    if sys.has_disturbance() {
        for j in 0..c.nrows() {
            f[j] -= ew.support(&c.g().row(j).transpose())?;
        }
    }
    let g = crate::numlin::hstack(&(c.g() * sys.a()), &(c.g() * sys.b()));
    let lifted = sxu.intersect(&HPolytope::new(g, f)?)?;
    project_with(&lifted, n, tol)
}

#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub set: HPolytope,
    pub converged: bool,
    pub iterations: usize,
}

/// `C₀ = π_x(S_xu)`, `C_{k+1} = C_k ∩ pre(C_k)` until mutual containment
/// within `slack` or the budget runs out. An empty iterate is a fixed point.
pub fn maximal_rcis(sys: &LinearSystem, sxu: &HPolytope, max_iters: usize, slack: f64) -> Result<MaximalResult> {
    maximal_rcis_with(sys, sxu, max_iters, slack, &Tolerances::DEFAULT)
}

pub fn maximal_rcis_with(sys: &LinearSystem, sxu: &HPolytope, max_iters: usize, slack: f64, tol: &Tolerances) -> Result<MaximalResult> {
    let n = sys.n();
    let mut c = project_with(sxu, n, tol)?;
    for k in 0..max_iters {
        if c.is_empty()? {
            return Ok(MaximalResult { set: HPolytope::empty(n), converged: true, iterations: k });
        }
        let next = remove_redundant(&c.intersect(&pre_with(sys, sxu, &c, tol)?)?)?;
        if next.is_empty()? {
            return Ok(MaximalResult { set: HPolytope::empty(n), converged: true, iterations: k + 1 });
        }
        if next.contains_within(&c, slack)? {
            return Ok(MaximalResult { set: next, converged: true, iterations: k + 1 });
        }
        c = next;
    }
    Ok(MaximalResult { set: c, converged: false, iterations: max_iters })
}

/// Disturbance-free dynamics with the safe set eroded by `W̄_∞ × {0}`.
#[derive(Debug, Clone)]
pub struct NominalProblem {
    pub system: LinearSystem,
    pub safe_set: HPolytope,
}

pub fn nominal_problem(sys: &LinearSystem, sxu: &HPolytope) -> Result<NominalProblem> {
    let winf = sys.acc_disturbance(Horizon::Infinite)?.pad(sys.m());
    Ok(NominalProblem { system: sys.without_disturbance(), safe_set: sxu.erode(&winf)? })
}

/// Fixed points `(A−I)x + Bu = 0` of the nominal system inside `S̄_xu`.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub exists: bool,
    /// Some fixed point lies in the interior of `S̄_xu`.
    pub interior: bool,
    /// Largest normalized slack `δ` of a fixed point (capped at 1).
    pub margin: f64,
    pub witness: Option<(Vector, Vector)>,
}

pub fn fixed_points(nominal: &NominalProblem) -> Result<FixedPointReport> {
    let sys = &nominal.system;
    let s = &nominal.safe_set;
    let (n, m) = (sys.n(), sys.m());
    let dim = n + m + 1;
    let k = s.nrows();
    let mut g = Matrix::zeros(k + 2 * n + 1, dim);
    let mut f = Vector::zeros(k + 2 * n + 1);
    g.view_mut((0, 0), (k, n + m)).copy_from(s.g());
    for j in 0..k {
        g[(j, n + m)] = s.g().row(j).norm();
    }
    f.rows_mut(0, k).copy_from(s.f());
    let mut eq = Matrix::zeros(n, n + m);
    eq.view_mut((0, 0), (n, n)).copy_from(&(sys.a() - Matrix::identity(n, n)));
    eq.view_mut((0, n), (n, m)).copy_from(sys.b());
    g.view_mut((k, 0), (n, n + m)).copy_from(&eq);
    g.view_mut((k + n, 0), (n, n + m)).copy_from(&(-&eq));
    g[(k + 2 * n, n + m)] = 1.0;
    f[k + 2 * n] = 1.0;
    let mut c = Vector::zeros(dim);
    c[n + m] = 1.0;
    let lp = LpProblem::maximize(c, g, f)?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal { value, point } => {
            let exists = value >= -1e-9;
            Ok(FixedPointReport {
                exists,
                interior: value > 1e-9,
                margin: value,
                witness: exists.then(|| (point.rows(0, n).into_owned(), point.rows(n, m).into_owned())),
            })
        }
        LpOutcome::Infeasible => Ok(FixedPointReport { exists: false, interior: false, margin: f64::NEG_INFINITY, witness: None }),
        LpOutcome::Unbounded => Err(Error::NumericalFailure("fixed-point margin is capped".into())),
    }
}

/// Nilpotent form of the problem; identity when `A` is already nilpotent.
fn nilpotent_form(sys: &LinearSystem, sxu: &HPolytope) -> Result<(LinearSystem, HPolytope)> {
    if sys.nu().is_some() {
        return Ok((sys.clone(), sxu.clone()));
    }
    let nil = sys.nilpotentize(sxu)?;
    Ok((nil.system, nil.safe_set))
}

#[derive(Debug, Clone)]
pub struct OuterBound {
    pub set: HPolytope,
    /// The nominal maximal CIS used inside the bound.
    pub nominal_max: MaximalResult,
}

/// `C_outer,ν`: states from which `ν` robustly safe steps reach the nominal
/// maximal CIS, using `reach ⊆ C̄_max + W̄_∞ ⇔ Σ A^{ν−1−i}Bu_i ∈ C̄_max`.
///
/// Non-nilpotent systems are first brought to deadbeat form.
pub fn outer_bound(sys: &LinearSystem, sxu: &HPolytope) -> Result<OuterBound> {
    let (sys, sxu) = nilpotent_form(sys, sxu)?;
    let nominal = nominal_problem(&sys, &sxu)?;
    let cmax = maximal_rcis(&nominal.system, &nominal.safe_set, DEFAULT_MAX_ITERS, Tolerances::DEFAULT.contain)?;
    let (n, m) = (sys.n(), sys.m());
    let nu = sys.nu().ok_or(Error::NotNilpotent(n))?;
    if cmax.set.is_empty()? {
        return Ok(OuterBound { set: HPolytope::empty(n), nominal_max: cmax });
    }
    let dim = n + nu * m;
    let apow = mat_powers(sys.a(), nu);
    let ew = MappedSet::new(sys.e().clone(), sys.w().clone())?;
    let gx = sxu.g().columns(0, n).into_owned();
    let gu = sxu.g().columns(n, m).into_owned();
    let k = sxu.nrows();
    let kc = cmax.set.nrows();
    let mut g = Matrix::zeros(nu * k + kc, dim);
    let mut f = Vector::zeros(nu * k + kc);
    let mut erosion = Vector::zeros(k);
    for t in 0..nu {
        if t >= 1 && sys.has_disturbance() {
            for j in 0..k {
                erosion[j] += ew.support(&apow[t - 1].tr_mul(&gx.row(j).transpose()))?;
            }
        }
        g.view_mut((t * k, 0), (k, n)).copy_from(&(&gx * &apow[t]));
        for i in 1..=t {
            let coef = &gx * &apow[i - 1] * sys.b();
            g.view_mut((t * k, n + (t - i) * m), (k, m)).copy_from(&coef);
        }
        g.view_mut((t * k, n + t * m), (k, m)).copy_from(&gu);
        f.rows_mut(t * k, k).copy_from(&(sxu.f() - &erosion));
    }
    for i in 0..nu {
        let coef = cmax.set.g() * &apow[nu - 1 - i] * sys.b();
        g.view_mut((nu * k, n + i * m), (kc, m)).copy_from(&coef);
    }
    f.rows_mut(nu * k, kc).copy_from(cmax.set.f());
    let lifted = HPolytope::new(g, f)?;
    Ok(OuterBound { set: project_with(&lifted, n, &Tolerances::DEFAULT)?, nominal_max: cmax })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    BothEmpty,
    BothNonempty,
}

#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub verdict: Completeness,
    pub implicit_empty: bool,
    pub outer_empty: bool,
    /// The nominal maximal iteration converged, so the outer bound is exact.
    pub converged: bool,
    pub fixed_point: FixedPointReport,
}

/// Emptiness of `C_xv,(0,1)` against emptiness of `C_outer,ν`.
///
/// Disagreement on a converged instance is an error.
pub fn weak_completeness(sys: &LinearSystem, sxu: &HPolytope) -> Result<CompletenessReport> {
    let (sys, sxu) = nilpotent_form(sys, sxu)?;
    let implicit_empty = implicit_rcis(&sys, &sxu, &LassoSpec::lasso(0, 1, sys.m())?)?.empty;
    let outer = outer_bound(&sys, &sxu)?;
    let outer_empty = outer.set.is_empty()?;
    let converged = outer.nominal_max.converged;
    let fixed_point = fixed_points(&nominal_problem(&sys, &sxu)?)?;
    if converged && implicit_empty != outer_empty {
        return Err(Error::OracleDisagreement(format!("implicit (0,1) empty = {implicit_empty}, outer bound empty = {outer_empty}")));
    }
    let verdict = if implicit_empty { Completeness::BothEmpty } else { Completeness::BothNonempty };
    Ok(CompletenessReport { verdict, implicit_empty, outer_empty, converged, fixed_point })
}

#[derive(Debug, Clone)]
pub struct ConvergenceCurve {
    /// `(τ, hausdorff(C_x,(τ,λ), C_outer,ν))`.
    pub points: Vec<(usize, f64)>,
    pub reference: HPolytope,
    /// The interior fixed-point assumption behind exponential convergence.
    pub precondition_met: bool,
    pub fixed_point: FixedPointReport,
}

pub fn convergence_curve(sys: &LinearSystem, sxu: &HPolytope, lambda: usize, taus: &[usize]) -> Result<ConvergenceCurve> {
    let (sys, sxu) = nilpotent_form(sys, sxu)?;
    let fixed_point = fixed_points(&nominal_problem(&sys, &sxu)?)?;
    let reference = outer_bound(&sys, &sxu)?.set;
    let mut points = Vec::with_capacity(taus.len());
    for &tau in taus {
        let ir = implicit_rcis(&sys, &sxu, &LassoSpec::lasso(tau, lambda, sys.m())?)?;
        let c = ir.explicit()?;
        points.push((tau, hausdorff(&c, &reference, HAUSDORFF_DIRS)?));
    }
    Ok(ConvergenceCurve { points, reference, precondition_met: fixed_point.interior, fixed_point })
}
