//! Largest safe hyper-box under lasso inputs.

use super::LassoSpec;
use crate::error::{Error, Result};
use crate::numlin::{mat_powers, solve_lp, LpOutcome, LpProblem, Matrix, Vector};
use crate::polytope::{HPolytope, HyperBox, MappedSet};
use crate::system::LinearSystem;

const NEWTON_STEPS: usize = 100;
const REL_STOP: f64 = 1e-8;
const DEGENERATE_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum BoxMode {
    /// Maximize `Σ log(b̄ᵢ − b̲ᵢ)`.
    GeometricMean,
    /// Maximize `Σ (b̄ᵢ − b̲ᵢ)`.
    SumWidth,
    /// Is the given box safe for some `v`?
    Feasibility(HyperBox),
}

#[derive(Debug, Clone)]
pub struct SafeBox {
    pub bbox: HyperBox,
    pub v: Vector,
    /// Some optimal width is (numerically) zero.
    pub degenerate: bool,
}

/// Constraints over `(b̲, b̄, v)`.
#[derive(Debug, Clone)]
pub struct BoxProgram {
    pub n: usize,
    pub polytope: HPolytope,
}

impl BoxProgram {
    /// Box rows `b̲ ≤ b̄`, reach rows
    /// `h_{[b̲,b̄]}((Aᵗ)ᵀg) + gᵀM_t v ≤ f − h_{W̄_t}(g)` for every row `g` of
    /// `S_x`, and input rows `HPᵗv ∈ U`, for `t < ν+τ+λ`.
    pub fn new(sys: &LinearSystem, sx: &HPolytope, u_set: &HPolytope, spec: &LassoSpec) -> Result<Self> {
        let (n, m) = (sys.n(), sys.m());
        let nu = sys.nu().ok_or(Error::NotNilpotent(n))?;
        if sx.dim() != n || u_set.dim() != m || spec.m() != m {
            return Err(Error::DimensionMismatch(format!(
                "box program with S_x in R^{}, U in R^{}, {} generator inputs",
                sx.dim(),
                u_set.dim(),
                spec.m()
            )));
        }
        let d = spec.dim_v();
        let blocks = nu + spec.q();
        let apow = mat_powers(sys.a(), nu);
        let ab: Vec<Matrix> = apow.iter().take(nu).map(|p| p * sys.b()).collect();
        let hp: Vec<Matrix> = mat_powers(spec.p(), blocks).iter().map(|p| spec.h() * p).collect();
        let ew = MappedSet::new(sys.e().clone(), sys.w().clone())?;
        let disturbed = sys.has_disturbance();
        let dim = 2 * n + d;

        let mut rows: Vec<Vector> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for i in 0..n {
            let mut r = Vector::zeros(dim);
            r[i] = 1.0;
            r[n + i] = -1.0;
            rows.push(r);
            rhs.push(0.0);
        }
        let mut erosion = Vector::zeros(sx.nrows());
        for t in 0..blocks {
            let mut mt = Matrix::zeros(n, d);
            for i in 1..=t.min(nu) {
                mt += &ab[i - 1] * &hp[t - i];
            }
            for j in 0..sx.nrows() {
                let g = sx.g().row(j).transpose();
                if t >= 1 && t <= nu && disturbed {
                    erosion[j] += ew.support(&apow[t - 1].tr_mul(&g))?;
                }
                let mut r = Vector::zeros(dim);
                if t < nu {
                    let c = apow[t].tr_mul(&g);
                    for i in 0..n {
                        r[i] = c[i].min(0.0);
                        r[n + i] = c[i].max(0.0);
                    }
                }
                r.rows_mut(2 * n, d).copy_from(&mt.tr_mul(&g));
                rows.push(r);
                rhs.push(sx.f()[j] - erosion[j]);
            }
            let ucoef = u_set.g() * &hp[t];
            for j in 0..u_set.nrows() {
                let mut r = Vector::zeros(dim);
                r.rows_mut(2 * n, d).copy_from(&ucoef.row(j).transpose());
                rows.push(r);
                rhs.push(u_set.f()[j]);
            }
        }
        let g = Matrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
        let polytope = HPolytope::new(g, Vector::from_vec(rhs))?;
        Ok(Self { n, polytope })
    }

    fn widths(&self, z: &Vector) -> Vector {
        Vector::from_fn(self.n, |i, _| z[self.n + i] - z[i])
    }

    fn split(&self, z: &Vector) -> Result<SafeBox> {
        let n = self.n;
        let lower = z.rows(0, n).into_owned();
        let upper = z.rows(n, n).into_owned().sup(&lower);
        let degenerate = (&upper - &lower).iter().any(|w| *w <= DEGENERATE_WIDTH);
        Ok(SafeBox { bbox: HyperBox::new(lower, upper)?, v: z.rows(2 * n, z.len() - 2 * n).into_owned(), degenerate })
    }

    fn width_lp(&self, weights: &Vector) -> Result<Vector> {
        let dim = self.polytope.dim();
        let mut c = Vector::zeros(dim);
        for i in 0..self.n {
            c[i] = -weights[i];
            c[self.n + i] = weights[i];
        }
        let lp = LpProblem::maximize(c, self.polytope.g().clone(), self.polytope.f().clone())?;
        match solve_lp(&lp)? {
            LpOutcome::Optimal { point, .. } => Ok(point),
            LpOutcome::Infeasible => Err(Error::Infeasible),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }

    /// `∃v: (b̲, b̄, v) ∈ C_B` for a fixed box.
    pub fn feasible_v(&self, b: &HyperBox) -> Result<Option<Vector>> {
        let n = self.n;
        let d = self.polytope.dim() - 2 * n;
        let fixed = crate::numlin::vcat(&b.lower, &b.upper);
        let gb = self.polytope.g().columns(0, 2 * n) * &fixed;
        let gv = self.polytope.g().columns(2 * n, d).into_owned();
        let slice = HPolytope::new(gv, self.polytope.f() - gb)?;
        slice.any_point()
    }

    fn geometric_mean(&self) -> Result<Vector> {
        let n = self.n;
        let Some((start, radius)) = self.polytope.chebyshev()? else {
            return Err(Error::Infeasible);
        };
        if radius <= 1e-9 {
            return self.width_lp(&Vector::from_element(n, 1.0));
        }
        let g = self.polytope.g();
        let f = self.polytope.f();
        let rows = g.nrows() as f64;
        let logvol = |z: &Vector| self.widths(z).iter().map(|w| w.ln()).sum::<f64>();
        let mut z = start;
        let mut t = 1.0;
        let mut steps = 0;
        let mut prev = logvol(&z);
        // Barrier path: minimize −t·Σ log wᵢ − Σ log(f − Gz) for increasing t.
        while steps < NEWTON_STEPS {
            loop {
                if steps >= NEWTON_STEPS {
                    break;
                }
                steps += 1;
                let s = f - g * &z;
                let w = self.widths(&z);
                let inv_s = s.map(|v| 1.0 / v);
                let mut grad = g.tr_mul(&inv_s);
                let mut hess = g.tr_mul(&(Matrix::from_diagonal(&inv_s.component_mul(&inv_s)) * g));
                for i in 0..n {
                    let a = t / w[i];
                    grad[i] += a;
                    grad[n + i] -= a;
                    let h = t / (w[i] * w[i]);
                    hess[(i, i)] += h;
                    hess[(n + i, n + i)] += h;
                    hess[(i, n + i)] -= h;
                    hess[(n + i, i)] -= h;
                }
                let dz = match hess.clone().cholesky() {
                    Some(ch) => ch.solve(&-&grad),
                    None => match hess.lu().solve(&-&grad) {
                        Some(dz) => dz,
                        None => break,
                    },
                };
                let decrement = -grad.dot(&dz);
                if !decrement.is_finite() || decrement <= 1e-12 {
                    break;
                }
                let phi = |z: &Vector| -> f64 {
                    let s = f - g * z;
                    let w = self.widths(z);
                    if s.iter().any(|v| *v <= 0.0) || w.iter().any(|v| *v <= 0.0) {
                        return f64::INFINITY;
                    }
                    -t * w.iter().map(|v| v.ln()).sum::<f64>() - s.iter().map(|v| v.ln()).sum::<f64>()
                };
                let base = phi(&z);
                let mut alpha = 1.0;
                while alpha > 1e-12 && phi(&(&z + &dz * alpha)) > base - 0.25 * alpha * decrement {
                    alpha *= 0.5;
                }
                if alpha <= 1e-12 {
                    break;
                }
                z += dz * alpha;
                if decrement * 0.5 < 1e-10 {
                    break;
                }
            }
            let cur = logvol(&z);
            let gap = rows / t;
            if (cur - prev).abs() <= REL_STOP * (1.0 + cur.abs()) && gap <= 1e-6 * (1.0 + cur.abs()) {
                break;
            }
            prev = cur;
            t *= 10.0;
        }
        self.polish(z)
    }

    /// Frank–Wolfe step: LP along the log-volume gradient, then a line search.
    fn polish(&self, z: Vector) -> Result<Vector> {
        let w = self.widths(&z);
        let vertex = self.width_lp(&w.map(|v| 1.0 / v))?;
        let logvol = |z: &Vector| {
            let w = self.widths(z);
            if w.iter().any(|v| *v <= 0.0) {
                f64::NEG_INFINITY
            } else {
                w.iter().map(|v| v.ln()).sum::<f64>()
            }
        };
        let dir = &vertex - &z;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..100 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if logvol(&(&z + &dir * a)) < logvol(&(&z + &dir * b)) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let best = [0.0, 0.5 * (lo + hi), 1.0]
            .into_iter()
            .map(|a| &z + &dir * a)
            .max_by(|p, q| logvol(p).total_cmp(&logvol(q)))
            .expect("three candidates");
        Ok(best)
    }
}

/// Largest safe box within `S_x` for the given lasso and input set.
///
/// `Feasibility` returns `Err(Infeasible)` when the box is not safe.
pub fn safe_box(sys: &LinearSystem, sx: &HPolytope, u_set: &HPolytope, spec: &LassoSpec, mode: BoxMode) -> Result<SafeBox> {
    let prog = BoxProgram::new(sys, sx, u_set, spec)?;
    if prog.polytope.is_empty()? {
        return Err(Error::Infeasible);
    }
    match mode {
        BoxMode::SumWidth => prog.split(&prog.width_lp(&Vector::from_element(prog.n, 1.0))?),
        BoxMode::GeometricMean => prog.split(&prog.geometric_mean()?),
        BoxMode::Feasibility(b) => {
            if b.dim() != prog.n {
                return Err(Error::DimensionMismatch("box dimension".into()));
            }
            match prog.feasible_v(&b)? {
                Some(v) => {
                    let degenerate = b.widths().iter().any(|w| *w <= DEGENERATE_WIDTH);
                    Ok(SafeBox { bbox: b, v, degenerate })
                }
                None => Err(Error::Infeasible),
            }
        }
    }
}

/// Whether `b` is certified safe by the box program.
pub fn is_safe_box(sys: &LinearSystem, sx: &HPolytope, u_set: &HPolytope, spec: &LassoSpec, b: &HyperBox) -> Result<bool> {
    match safe_box(sys, sx, u_set, spec, BoxMode::Feasibility(b.clone())) {
        Ok(_) => Ok(true),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}
