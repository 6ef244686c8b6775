//! Dense two-phase simplex for `min/max cᵀx s.t. Gx ≤ f` with free `x`.
//!
//! The primal has few variables and many rows, so the tableau is built on
//! the dual `min fᵀy s.t. Gᵀy = c, y ≥ 0`: one tableau row per primal
//! variable. The primal optimizer is the simplex multiplier vector of the
//! dual, recomputed from the final basis by a direct solve.

use super::{ensure_finite_matrix, ensure_finite_vector, Matrix, Vector};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `opt cᵀx s.t. Gx ≤ f`. Equalities are encoded as inequality pairs.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vector,
    pub constraints: Matrix,
    pub bounds: Vector,
    pub sense: Sense,
}

impl LpProblem {
    pub fn new(objective: Vector, constraints: Matrix, bounds: Vector, sense: Sense) -> Result<Self> {
        if constraints.ncols() != objective.len() {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} entries, constraints have {} columns",
                objective.len(),
                constraints.ncols()
            )));
        }
        if constraints.nrows() != bounds.len() {
            return Err(Error::DimensionMismatch(format!("{} constraint rows but {} bounds", constraints.nrows(), bounds.len())));
        }
        ensure_finite_vector(&objective, "LP objective")?;
        ensure_finite_matrix(&constraints, "LP constraints")?;
        ensure_finite_vector(&bounds, "LP bounds")?;
        Ok(Self { objective, constraints, bounds, sense })
    }

    pub fn minimize(objective: Vector, constraints: Matrix, bounds: Vector) -> Result<Self> {
        Self::new(objective, constraints, bounds, Sense::Minimize)
    }

    pub fn maximize(objective: Vector, constraints: Matrix, bounds: Vector) -> Result<Self> {
        Self::new(objective, constraints, bounds, Sense::Maximize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vector },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&Vector> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    solve_lp_with(p, &Tolerances::DEFAULT)
}

pub fn solve_lp_with(p: &LpProblem, tol: &Tolerances) -> Result<LpOutcome> {
    let n = p.objective.len();
    let c_max: Vec<f64> = match p.sense {
        Sense::Maximize => p.objective.iter().copied().collect(),
        Sense::Minimize => p.objective.iter().map(|v| -v).collect(),
    };

    // Normalize rows; zero rows are either trivially satisfied or infeasible.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p.constraints.nrows());
    let mut rhs: Vec<f64> = Vec::with_capacity(p.constraints.nrows());
    for (i, r) in p.constraints.row_iter().enumerate() {
        let norm = r.norm();
        if norm <= 1e-14 {
            if p.bounds[i] < -tol.feas {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        rows.push(r.iter().map(|v| v / norm).collect());
        rhs.push(p.bounds[i] / norm);
    }

    // Pure feasibility with the origin already feasible needs no pivots.
    if c_max.iter().all(|v| *v == 0.0) && rhs.iter().all(|b| *b >= 0.0) {
        return Ok(LpOutcome::Optimal { value: 0.0, point: Vector::zeros(n) });
    }

    let point = match dual_simplex(n, &rows, &rhs, &c_max, tol)? {
        DualResult::Optimal(x) => x,
        DualResult::DualUnbounded => return Ok(LpOutcome::Infeasible),
        DualResult::DualInfeasible => {
            let zero = vec![0.0; n];
            return match dual_simplex(n, &rows, &rhs, &zero, tol)? {
                DualResult::Optimal(_) => Ok(LpOutcome::Unbounded),
                DualResult::DualUnbounded => Ok(LpOutcome::Infeasible),
                DualResult::DualInfeasible => Err(Error::NumericalFailure("feasibility phase rejected the zero objective".into())),
            };
        }
    };

    let point = Vector::from_vec(point);
    let viol = rows.iter().zip(&rhs).map(|(r, b)| dot(r, point.as_slice()) - b).fold(0.0_f64, f64::max);
    let scale = 1.0 + rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if viol > 1e-6 * scale {
        return Err(Error::NumericalFailure(format!("LP point violates constraints by {viol:.3e}")));
    }
    let value = p.objective.dot(&point);
    Ok(LpOutcome::Optimal { value, point })
}

enum DualResult {
    Optimal(Vec<f64>),
    DualInfeasible,
    DualUnbounded,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major simplex tableau with artificial columns kept in place.
struct Tableau {
    m: usize,
    ncols: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let piv = self.data[r * w + c];
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[c] = 1.0;
        }
        let prow: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let a = self.data[i * w + c];
            if a != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= a * p;
                }
                row[c] = 0.0;
                let last = &mut row[self.ncols];
                if *last < 0.0 && *last > -1e-13 {
                    *last = 0.0;
                }
            }
        }
        let a = self.obj[c];
        if a != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&prow) {
                *v -= a * p;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations with entering columns restricted to `0..enter_limit`.
    /// With `zero_target`, stops as soon as the objective reaches zero.
    fn run(&mut self, enter_limit: usize, tol: &Tolerances, budget: &mut usize, zero_target: bool) -> Result<bool> {
        let mut degenerate = 0usize;
        let mut bland = false;
        let rc_tol = 1e-10;
        loop {
            if zero_target && -self.obj[self.ncols] <= 1e-13 {
                return Ok(true);
            }
            if *budget == 0 {
                return Err(Error::NumericalFailure("simplex iteration budget exhausted".into()));
            }
            *budget -= 1;

            let entering = if bland {
                (0..enter_limit).find(|&j| self.obj[j] < -rc_tol)
            } else {
                let mut best = None;
                let mut best_val = -rc_tol;
                for j in 0..enter_limit {
                    if self.obj[j] < best_val {
                        best_val = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(true);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > tol.pivot {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.at(l, col)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        best_ratio = ratio.min(best_ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Ok(false);
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > tol.degenerate_pivots {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
    }
}

/// Solves `min fᵀy s.t. Gᵀy = c, y ≥ 0` and returns the multipliers.
fn dual_simplex(n: usize, rows: &[Vec<f64>], rhs: &[f64], c: &[f64], tol: &Tolerances) -> Result<DualResult> {
    let k = rows.len();
    if n == 0 {
        return Ok(if rhs.iter().all(|b| *b >= -tol.feas) { DualResult::Optimal(vec![]) } else { DualResult::DualUnbounded });
    }
    let ncols = k + n;
    let width = ncols + 1;
    let mut data = vec![0.0; n * width];
    for j in 0..n {
        let sign = if c[j] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut data[j * width..(j + 1) * width];
        for (i, r) in rows.iter().enumerate() {
            row[i] = sign * r[j];
        }
        row[k + j] = 1.0;
        row[ncols] = sign * c[j];
    }
    let mut obj = vec![0.0; width];
    for j in 0..n {
        for i in 0..width {
            if i < k || i == ncols {
                obj[i] -= data[j * width + i];
            }
        }
    }
    let mut t = Tableau { m: n, ncols, width, data, obj, basis: (k..k + n).collect() };
    let mut budget = 10 * (k + n) + 1000;

    // Phase 1.
    t.run(k, tol, &mut budget, true)?;
    let infeas = -t.obj[ncols];
    let c_scale = 1.0 + c.iter().map(|v| v.abs()).sum::<f64>();
    if infeas > 1e-9 * c_scale {
        return Ok(DualResult::DualInfeasible);
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 0..n {
        if t.basis[r] >= k {
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..k {
                let a = t.at(r, j).abs();
                if a > best_abs && !t.basis.contains(&j) {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                t.pivot(r, j);
            }
        }
    }

    // Phase 2.
    let mut obj = vec![0.0; width];
    obj[..k].copy_from_slice(rhs);
    for r in 0..n {
        let b = t.basis[r];
        if b < k {
            let cb = rhs[b];
            if cb != 0.0 {
                for (o, d) in obj.iter_mut().zip(&t.data[r * width..(r + 1) * width]) {
                    *o -= cb * d;
                }
            }
        }
    }
    for r in 0..n {
        if t.basis[r] < k {
            obj[t.basis[r]] = 0.0;
        }
    }
    t.obj = obj;
    if !t.run(k, tol, &mut budget, false)? {
        return Ok(DualResult::DualUnbounded);
    }

    // Recover multipliers from the basis: tight rows and pinned coordinates.
    let mut m = Matrix::zeros(n, n);
    let mut b = Vector::zeros(n);
    for r in 0..n {
        let col = t.basis[r];
        if col < k {
            for j in 0..n {
                m[(r, j)] = rows[col][j];
            }
            b[r] = rhs[col];
        } else {
            m[(r, col - k)] = 1.0;
        }
    }
    let from_tableau = || -> Vec<f64> {
        (0..n)
            .map(|j| {
                let sign = if c[j] < 0.0 { -1.0 } else { 1.0 };
                -sign * t.obj[k + j]
            })
            .collect()
    };
    let x = match m.lu().solve(&b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => {
            let direct: Vec<f64> = x.iter().copied().collect();
            let alt = from_tableau();
            // Prefer whichever candidate is more feasible.
            let viol = |p: &[f64]| rows.iter().zip(rhs).map(|(r, bb)| dot(r, p) - bb).fold(0.0_f64, f64::max);
            if viol(&direct) <= viol(&alt) + 1e-12 {
                direct
            } else {
                alt
            }
        }
        _ => from_tableau(),
    };
    Ok(DualResult::Optimal(x))
}
