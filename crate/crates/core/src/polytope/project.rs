//! Fourier–Motzkin projection with LP-based redundancy removal.

use std::collections::HashMap;

use super::HPolytope;
use crate::error::{Error, Result};
use crate::numlin::{solve_lp, LpOutcome, LpProblem, Matrix, Vector};
use crate::tol::Tolerances;

const COEF_ZERO: f64 = 1e-12;

/// Projection onto the first `keep` coordinates.
pub fn project(p: &HPolytope, keep: usize) -> Result<HPolytope> {
    project_with(p, keep, &Tolerances::DEFAULT)
}

pub fn project_with(p: &HPolytope, keep: usize, tol: &Tolerances) -> Result<HPolytope> {
    let n = p.dim();
    if keep > n {
        return Err(Error::DimensionMismatch(format!("cannot keep {keep} of {n} coordinates")));
    }
    if p.is_empty()? {
        return Ok(HPolytope::empty(keep));
    }
    let start = remove_redundant_with(p, tol)?;
    let mut rows: Vec<Vec<f64>> = start.g().row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rhs: Vec<f64> = start.f().iter().copied().collect();
    let mut cols = n;

    while cols > keep {
        let j = pick_variable(&rows, keep, cols);
        let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for (i, r) in rows.iter().enumerate() {
            if r[j] > COEF_ZERO {
                pos.push(i);
            } else if r[j] < -COEF_ZERO {
                neg.push(i);
            } else {
                zero.push(i);
            }
        }
        let produced = zero.len() + pos.len() * neg.len();
        if produced > tol.fm_row_cap {
            return Err(Error::ExplosionAbort { rows: produced, cap: tol.fm_row_cap });
        }
        let mut next_rows = Vec::with_capacity(produced);
        let mut next_rhs = Vec::with_capacity(produced);
        for &i in &zero {
            next_rows.push(drop_col(&rows[i], j));
            next_rhs.push(rhs[i]);
        }
        for &a in &pos {
            for &b in &neg {
                let (wa, wb) = (-rows[b][j], rows[a][j]);
                let combined: Vec<f64> =
                    rows[a].iter().zip(&rows[b]).enumerate().filter(|(c, _)| *c != j).map(|(_, (x, y))| wa * x + wb * y).collect();
                next_rows.push(combined);
                next_rhs.push(wa * rhs[a] + wb * rhs[b]);
            }
        }
        cols -= 1;
        let (r, f) = normalize_dedupe(next_rows, next_rhs, cols);
        if r.is_empty() {
            // Every row involved the eliminated variable on one side only.
            rows = r;
            rhs = f;
            if cols == keep {
                return Ok(HPolytope::universe(keep));
            }
            continue;
        }
        let poly = HPolytope::new(Matrix::from_fn(r.len(), cols, |i, c| r[i][c]), Vector::from_vec(f))?;
        if poly.is_trivially_empty() {
            return Ok(HPolytope::empty(keep));
        }
        let reduced = remove_redundant_with(&poly, tol)?;
        rows = reduced.g().row_iter().map(|r| r.iter().copied().collect()).collect();
        rhs = reduced.f().iter().copied().collect();
    }

    if rows.is_empty() {
        return Ok(HPolytope::universe(keep));
    }
    HPolytope::new(Matrix::from_fn(rows.len(), keep, |i, c| rows[i][c]), Vector::from_vec(rhs))
}

/// Greedy choice minimizing the net number of rows produced.
fn pick_variable(rows: &[Vec<f64>], keep: usize, cols: usize) -> usize {
    let mut best = (keep..cols).next().unwrap();
    let mut best_cost = i64::MAX;
    for j in keep..cols {
        let pos = rows.iter().filter(|r| r[j] > COEF_ZERO).count() as i64;
        let neg = rows.iter().filter(|r| r[j] < -COEF_ZERO).count() as i64;
        let cost = pos * neg - pos - neg;
        if cost < best_cost {
            best_cost = cost;
            best = j;
        }
    }
    best
}

fn drop_col(r: &[f64], j: usize) -> Vec<f64> {
    r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()
}

/// Unit-normal rows, zero rows resolved, near-duplicates merged keeping the tightest bound.
fn normalize_dedupe(rows: Vec<Vec<f64>>, rhs: Vec<f64>, cols: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut out_rows: Vec<Vec<f64>> = Vec::new();
    let mut out_rhs: Vec<f64> = Vec::new();
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    for (mut r, mut b) in rows.into_iter().zip(rhs) {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= COEF_ZERO {
            if b < -1e-9 {
                return (vec![vec![0.0; cols]], vec![-1.0]);
            }
            continue;
        }
        for v in r.iter_mut() {
            *v /= norm;
        }
        b /= norm;
        let key: Vec<i64> = r.iter().map(|v| (v * 1e9).round() as i64).collect();
        match seen.get(&key) {
            Some(&idx) => {
                if b < out_rhs[idx] {
                    out_rhs[idx] = b;
                }
            }
            None => {
                seen.insert(key, out_rows.len());
                out_rows.push(r);
                out_rhs.push(b);
            }
        }
    }
    (out_rows, out_rhs)
}

/// Drops rows implied by the others, one LP per row.
pub fn remove_redundant(p: &HPolytope) -> Result<HPolytope> {
    remove_redundant_with(p, &Tolerances::DEFAULT)
}

pub(crate) fn remove_redundant_with(p: &HPolytope, tol: &Tolerances) -> Result<HPolytope> {
    if p.is_empty()? {
        return Ok(HPolytope::empty(p.dim()));
    }
    let n = p.dim();
    let rows: Vec<Vec<f64>> = p.g().row_iter().map(|r| r.iter().copied().collect()).collect();
    let rhs: Vec<f64> = p.f().iter().copied().collect();
    let (rows, rhs) = normalize_dedupe(rows, rhs, n);
    let k = rows.len();
    if k <= 1 {
        if k == 0 {
            return Ok(HPolytope::universe(n));
        }
        return HPolytope::new(Matrix::from_row_slice(1, n, &rows[0]), Vector::from_vec(rhs));
    }
    let mut alive = vec![true; k];
    for i in 0..k {
        let idx: Vec<usize> = (0..k).filter(|&r| alive[r]).collect();
        let g = Matrix::from_fn(idx.len(), n, |a, c| rows[idx[a]][c]);
        let f = Vector::from_fn(idx.len(), |a, _| if idx[a] == i { rhs[i] + 1.0 } else { rhs[idx[a]] });
        let lp = LpProblem::maximize(Vector::from_row_slice(&rows[i]), g, f)?;
        if let LpOutcome::Optimal { value, .. } = solve_lp(&lp)? {
            if value <= rhs[i] + tol.redundant {
                alive[i] = false;
            }
        }
    }
    let idx: Vec<usize> = (0..k).filter(|&r| alive[r]).collect();
    HPolytope::new(Matrix::from_fn(idx.len(), n, |a, c| rows[idx[a]][c]), Vector::from_fn(idx.len(), |a, _| rhs[idx[a]]))
}
