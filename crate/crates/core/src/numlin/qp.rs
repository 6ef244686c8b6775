//! Primal active-set method for convex QPs `min ½zᵀQz + cᵀz + r s.t. Gz ≤ f`.

use super::{ensure_finite_matrix, ensure_finite_vector, solve_lp_with, LpOutcome, LpProblem, Matrix, Vector};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q: Matrix,
    pub c: Vector,
    /// Constant added to the reported objective value.
    pub offset: f64,
    pub constraints: Matrix,
    pub bounds: Vector,
}

impl QpProblem {
    pub fn new(q: Matrix, c: Vector, constraints: Matrix, bounds: Vector) -> Result<Self> {
        let n = c.len();
        if q.shape() != (n, n) || constraints.ncols() != n || constraints.nrows() != bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "QP with Q {:?}, c {}, G {:?}, f {}",
                q.shape(),
                n,
                constraints.shape(),
                bounds.len()
            )));
        }
        ensure_finite_matrix(&q, "QP cost matrix")?;
        ensure_finite_vector(&c, "QP linear cost")?;
        ensure_finite_matrix(&constraints, "QP constraints")?;
        ensure_finite_vector(&bounds, "QP bounds")?;
        Ok(Self { q, c, offset: 0.0, constraints, bounds })
    }

    pub fn with_offset(mut self, r: f64) -> Self {
        self.offset = r;
        self
    }

    /// `min ‖z − target‖²` over `Gz ≤ f`.
    pub fn nearest_point(target: &Vector, constraints: Matrix, bounds: Vector) -> Result<Self> {
        let n = target.len();
        Ok(Self::new(Matrix::identity(n, n) * 2.0, target * -2.0, constraints, bounds)?.with_offset(target.norm_squared()))
    }

    pub fn objective(&self, z: &Vector) -> f64 {
        0.5 * z.dot(&(&self.q * z)) + self.c.dot(z) + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal { value: f64, point: Vector },
    Infeasible,
}

impl QpOutcome {
    pub fn point(&self) -> Option<&Vector> {
        match self {
            QpOutcome::Optimal { point, .. } => Some(point),
            QpOutcome::Infeasible => None,
        }
    }
}

pub fn solve_qp(p: &QpProblem) -> Result<QpOutcome> {
    solve_qp_with(p, &Tolerances::DEFAULT)
}

pub fn solve_qp_with(p: &QpProblem, tol: &Tolerances) -> Result<QpOutcome> {
    let n = p.c.len();
    let sym = (&p.q + p.q.transpose()) * 0.5;
    let scale = 1.0 + sym.amax();
    let min_eig = if n == 0 { 0.0 } else { sym.clone().symmetric_eigenvalues().min() };
    if min_eig < tol.psd_floor * scale {
        return Err(Error::NotPsd(min_eig));
    }
    let mut h = sym;
    if min_eig < tol.qp_reg * scale {
        for i in 0..n {
            h[(i, i)] += tol.qp_reg * scale;
        }
    }

    // Normalized constraint rows; zero rows are checked and dropped.
    let mut rows: Vec<Vector> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (i, r) in p.constraints.row_iter().enumerate() {
        let nr = r.norm();
        if nr <= 1e-14 {
            if p.bounds[i] < -tol.feas {
                return Ok(QpOutcome::Infeasible);
            }
            continue;
        }
        rows.push(r.transpose() / nr);
        rhs.push(p.bounds[i] / nr);
    }
    let k = rows.len();

    let start = LpProblem::minimize(Vector::zeros(n), p.constraints.clone(), p.bounds.clone())?;
    let mut z = match solve_lp_with(&start, tol)? {
        LpOutcome::Optimal { point, .. } => point,
        LpOutcome::Infeasible => return Ok(QpOutcome::Infeasible),
        LpOutcome::Unbounded => return Err(Error::NumericalFailure("zero-objective LP reported unbounded".into())),
    };

    let mut working: Vec<usize> = Vec::new();
    let mut budget = 10 * (k + n) + 1000;
    let multipliers: Vec<f64>;
    loop {
        if budget == 0 {
            return Err(Error::NumericalFailure("active-set iteration budget exhausted".into()));
        }
        budget -= 1;

        let g = &h * &z + &p.c;
        let (step, mu) = solve_eqp(&h, &g, &rows, &working)?;
        let step_norm = step.amax();
        if step_norm <= 1e-11 * (1.0 + z.amax()) {
            let worst = mu.iter().enumerate().filter(|(_, m)| **m < -1e-10).min_by(|a, b| a.1.total_cmp(b.1));
            match worst {
                Some((idx, _)) => {
                    working.remove(idx);
                    continue;
                }
                None => {
                    multipliers = mu;
                    break;
                }
            }
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..k {
            if working.contains(&i) {
                continue;
            }
            let ap = rows[i].dot(&step);
            if ap > 1e-12 {
                let slack = (rhs[i] - rows[i].dot(&z)).max(0.0);
                let a = slack / ap;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        z += step * alpha;
        if let Some(i) = blocking {
            working.push(i);
        }
    }

    // KKT residual on the regularized problem.
    let mut grad = &h * &z + &p.c;
    for (w, m) in working.iter().zip(&multipliers) {
        grad += &rows[*w] * *m;
    }
    let resid = grad.amax() / (1.0 + p.c.amax() + h.amax() * z.amax());
    if resid > tol.kkt {
        return Err(Error::NumericalFailure(format!("QP KKT residual {resid:.3e}")));
    }
    let viol = rows.iter().zip(&rhs).map(|(r, b)| r.dot(&z) - b).fold(0.0_f64, f64::max);
    if viol > 1e-6 * (1.0 + rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()))) {
        return Err(Error::NumericalFailure(format!("QP point violates constraints by {viol:.3e}")));
    }
    Ok(QpOutcome::Optimal { value: p.objective(&z), point: z })
}

/// Equality-constrained step: `[H Aᵀ; A 0][p; μ] = [−g; 0]`.
fn solve_eqp(h: &Matrix, g: &Vector, rows: &[Vector], working: &[usize]) -> Result<(Vector, Vec<f64>)> {
    let n = g.len();
    let w = working.len();
    let mut kkt = Matrix::zeros(n + w, n + w);
    kkt.view_mut((0, 0), (n, n)).copy_from(h);
    for (j, &i) in working.iter().enumerate() {
        for c in 0..n {
            kkt[(n + j, c)] = rows[i][c];
            kkt[(c, n + j)] = rows[i][c];
        }
    }
    let mut rhs = Vector::zeros(n + w);
    for i in 0..n {
        rhs[i] = -g[i];
    }
    let sol = kkt
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::NumericalFailure("singular KKT system".into()))?;
    let step = sol.rows(0, n).into_owned();
    let mu = sol.rows(n, w).iter().copied().collect();
    Ok((step, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_rows(n: usize, lo: f64, hi: f64) -> (Matrix, Vector) {
        let mut g = Matrix::zeros(2 * n, n);
        let mut f = Vector::zeros(2 * n);
        for i in 0..n {
            g[(2 * i, i)] = 1.0;
            f[2 * i] = hi;
            g[(2 * i + 1, i)] = -1.0;
            f[2 * i + 1] = -lo;
        }
        (g, f)
    }

    #[test]
    fn clamped_projection() {
        let p =
            QpProblem::nearest_point(&Vector::from_element(1, 2.0), Matrix::from_element(1, 1, 1.0), Vector::from_element(1, 1.0)).unwrap();
        let QpOutcome::Optimal { value, point } = solve_qp(&p).unwrap() else { panic!() };
        assert!((value - 1.0).abs() < 1e-8);
        assert!((point[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn interior_minimum() {
        let (g, f) = box_rows(1, -1.0, 1.0);
        let p = QpProblem::new(Matrix::from_element(1, 1, 2.0), Vector::zeros(1), g, f).unwrap();
        let QpOutcome::Optimal { value, point } = solve_qp(&p).unwrap() else { panic!() };
        assert!(value.abs() < 1e-10 && point[0].abs() < 1e-8);
    }

    #[test]
    fn projection_onto_box_matches_clamp() {
        let target = Vector::from_row_slice(&[3.0, 0.0]);
        let (g, f) = box_rows(2, 0.0, 1.0);
        let p = QpProblem::nearest_point(&target, g, f).unwrap();
        let QpOutcome::Optimal { value, point } = solve_qp(&p).unwrap() else { panic!() };
        let clamp = target.map(|v| v.clamp(0.0, 1.0));
        assert!((&point - &clamp).amax() < 1e-8);
        assert!((value - (target - clamp).norm_squared()).abs() < 1e-8);
        assert!((value - 4.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_constraints() {
        let g = Matrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let f = Vector::from_row_slice(&[-1.0, -1.0]);
        let p = QpProblem::nearest_point(&Vector::zeros(1), g, f).unwrap();
        assert_eq!(solve_qp(&p).unwrap(), QpOutcome::Infeasible);
    }

    #[test]
    fn rejects_indefinite() {
        let (g, f) = box_rows(1, -1.0, 1.0);
        let p = QpProblem::new(Matrix::from_element(1, 1, -1.0), Vector::zeros(1), g, f).unwrap();
        assert!(matches!(solve_qp(&p), Err(Error::NotPsd(_))));
    }

    #[test]
    fn random_box_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(1..6);
            let t = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let (g, f) = box_rows(n, -1.0, 1.0);
            let p = QpProblem::nearest_point(&t, g, f).unwrap();
            let z = solve_qp(&p).unwrap().point().unwrap().clone();
            let clamp = t.map(|v| v.clamp(-1.0, 1.0));
            assert!((z - clamp).amax() < 1e-8);
        }
    }
}
