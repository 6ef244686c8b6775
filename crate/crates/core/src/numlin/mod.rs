//! Dense linear algebra helpers plus the LP and QP solvers used everywhere else.

mod lp;
mod qp;

pub use lp::{solve_lp, solve_lp_with, LpOutcome, LpProblem, Sense};
pub use qp::{solve_qp, solve_qp_with, QpOutcome, QpProblem};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// `M^k` by repeated multiplication; `k = 0` gives the identity.
pub fn mat_power(m: &Matrix, k: usize) -> Matrix {
    assert!(m.is_square(), "mat_power needs a square matrix");
    let mut out = Matrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// All powers `M^0, …, M^k`.
pub fn mat_powers(m: &Matrix, k: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(Matrix::identity(m.nrows(), m.ncols()));
    for i in 0..k {
        let next = &out[i] * m;
        out.push(next);
    }
    out
}

/// Induced ∞-norm (max absolute row sum).
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn ensure_finite_matrix(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_vector(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Block-diagonal matrix from the given blocks.
pub fn blkdiag(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `[a b]`.
pub fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// `[a; b]`.
pub fn vstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn vcat(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Numerical rank via column-pivoted QR, relative tolerance `rel_tol`.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let top = diag.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    diag.iter().filter(|d| **d > rel_tol * top).count()
}

/// Serde adapters storing matrices as row-major nested arrays.
pub mod serde_mat {
    use super::Matrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>], ncols_if_empty: usize) -> Result<Matrix, String> {
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, ncols_if_empty));
        }
        let nc = rows[0].len();
        if rows.iter().any(|r| r.len() != nc) {
            return Err("ragged matrix rows".into());
        }
        Ok(Matrix::from_fn(rows.len(), nc, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows, 0).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<Matrix>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Matrix>, D::Error> {
            let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
            rows.map(|r| from_rows(&r, 0).map_err(serde::de::Error::custom)).transpose()
        }
    }
}

/// Serde adapter storing vectors as flat arrays.
pub mod serde_vec {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(Vector::from_vec(v))
    }
}
