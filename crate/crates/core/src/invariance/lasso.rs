//! Eventually periodic input generators `v⁺ = Pv`, `u = Hv`.

use crate::error::{Error, Result};
use crate::numlin::{blkdiag, mat_power, norm_inf, rank, Matrix};
use crate::tol::Tolerances;

/// Input parameterization: `u_t = H Pᵗ v` with `Pᵗ = P^{t+λ}` for `t ≥ τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSpec {
    tau: usize,
    lambda: usize,
    p: Matrix,
    h: Matrix,
}

impl LassoSpec {
    /// The `(τ,λ)`-lasso generator for `m` inputs.
    pub fn lasso(tau: usize, lambda: usize, m: usize) -> Result<Self> {
        let (p, h) = lasso_matrices(tau, lambda, m)?;
        Ok(Self { tau, lambda, p, h })
    }

    /// A user-supplied generator. When `period` is `None` the smallest
    /// `(τ,λ)` with `τ ≤ d`, `λ ≤ 2d` is searched for.
    pub fn custom(p: Matrix, h: Matrix, period: Option<(usize, usize)>) -> Result<Self> {
        let d = p.nrows();
        if !p.is_square() || h.ncols() != d || h.nrows() == 0 {
            return Err(Error::InvalidLasso(format!("P {:?} and H {:?}", p.shape(), h.shape())));
        }
        crate::numlin::ensure_finite_matrix(&p, "P")?;
        crate::numlin::ensure_finite_matrix(&h, "H")?;
        if rank(&h, Tolerances::DEFAULT.rank) < h.nrows() {
            return Err(Error::InvalidLasso("H must have full row rank".into()));
        }
        let (tau, lambda) = match period {
            Some((tau, lambda)) => {
                if lambda == 0 || !verify_eventually_periodic(&p, tau, lambda).holds {
                    return Err(Error::InvalidLasso(format!("P is not ({tau},{lambda}) eventually periodic")));
                }
                (tau, lambda)
            }
            None => (0..=d)
                .flat_map(|t| (1..=2 * d.max(1)).map(move |l| (t, l)))
                .find(|&(t, l)| verify_eventually_periodic(&p, t, l).holds)
                .ok_or_else(|| Error::InvalidLasso("P is not eventually periodic".into()))?,
        };
        Ok(Self { tau, lambda, p, h })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    /// `τ + λ`.
    pub fn q(&self) -> usize {
        self.tau + self.lambda
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    /// Number of inputs `m`.
    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    /// Dimension of the generator state `v`.
    pub fn dim_v(&self) -> usize {
        self.p.nrows()
    }
}

/// Block-diagonal lasso matrices: `m` copies of the `q×q` shift register
/// `P̄` whose last row feeds back the start of the periodic segment, and `H`
/// reading the head of each register.
pub fn lasso_matrices(tau: usize, lambda: usize, m: usize) -> Result<(Matrix, Matrix)> {
    if lambda == 0 || m == 0 {
        return Err(Error::InvalidLasso(format!("lasso ({tau},{lambda}) with {m} inputs")));
    }
    let q = tau + lambda;
    let mut pbar = Matrix::zeros(q, q);
    for i in 0..q - 1 {
        pbar[(i, i + 1)] = 1.0;
    }
    pbar[(q - 1, tau)] = 1.0;
    let mut hbar = Matrix::zeros(1, q);
    hbar[(0, 0)] = 1.0;
    let p = blkdiag(&vec![&pbar; m]);
    let h = blkdiag(&vec![&hbar; m]);
    Ok((p, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicCheck {
    pub holds: bool,
    /// Smallest `(τ*, λ*)` with `τ* ≤ τ` and `λ*` dividing `λ`.
    pub minimal: Option<(usize, usize)>,
}

pub fn verify_eventually_periodic(p: &Matrix, tau: usize, lambda: usize) -> PeriodicCheck {
    let holds_at = |t: usize, l: usize| {
        let a = mat_power(p, t);
        let b = mat_power(p, t + l);
        norm_inf(&(&a - &b)) <= Tolerances::DEFAULT.periodic * (1.0 + norm_inf(&a))
    };
    if lambda == 0 || !p.is_square() || !holds_at(tau, lambda) {
        return PeriodicCheck { holds: false, minimal: None };
    }
    let minimal =
        (0..=tau).flat_map(|t| (1..=lambda).filter(|l| lambda.is_multiple_of(*l)).map(move |l| (t, l))).find(|&(t, l)| holds_at(t, l));
    PeriodicCheck { holds: true, minimal }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::Vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_lassos() {
        let (p, h) = lasso_matrices(0, 1, 1).unwrap();
        assert_eq!(p, Matrix::from_element(1, 1, 1.0));
        assert_eq!(h, Matrix::from_element(1, 1, 1.0));
        let (p, h) = lasso_matrices(0, 2, 1).unwrap();
        assert_eq!(p, Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(h, Matrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let (p, _) = lasso_matrices(1, 2, 1).unwrap();
        assert_ne!(p, mat_power(&p, 2));
        assert_eq!(p, mat_power(&p, 3));
    }

    #[test]
    fn generated_sequences_are_lassos() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (tau, lambda, m) in [(0, 1, 1), (2, 3, 1), (1, 2, 2), (3, 1, 3), (0, 4, 2)] {
            let (p, h) = lasso_matrices(tau, lambda, m).unwrap();
            assert!(verify_eventually_periodic(&p, tau, lambda).holds);
            let v = Vector::from_fn(p.nrows(), |_, _| rng.random_range(-1.0..1.0));
            let u: Vec<Vector> = (0..tau + 3 * lambda).map(|t| &h * mat_power(&p, t) * &v).collect();
            for t in tau..tau + 2 * lambda {
                assert_eq!(u[t], u[t + lambda]);
            }
            // The first q inputs are free.
            for (t, ut) in u.iter().enumerate().take(tau + lambda) {
                for j in 0..m {
                    assert_eq!(ut[j], v[j * (tau + lambda) + t]);
                }
            }
        }
    }

    #[test]
    fn minimal_periods() {
        let id = Matrix::identity(3, 3);
        assert_eq!(verify_eventually_periodic(&id, 2, 4).minimal, Some((0, 1)));
        let mut n = Matrix::zeros(3, 3);
        n[(0, 1)] = 1.0;
        n[(1, 2)] = 1.0;
        assert_eq!(verify_eventually_periodic(&n, 3, 1).minimal, Some((3, 1)));
        assert!(!verify_eventually_periodic(&n, 2, 1).holds);
        let (p, _) = lasso_matrices(2, 3, 1).unwrap();
        assert_eq!(verify_eventually_periodic(&p, 2, 3).minimal, Some((2, 3)));
        assert!(!verify_eventually_periodic(&p, 1, 3).holds);
    }

    #[test]
    fn custom_generators() {
        let (p, h) = lasso_matrices(1, 2, 1).unwrap();
        let spec = LassoSpec::custom(p.clone(), h.clone(), None).unwrap();
        assert_eq!((spec.tau(), spec.lambda()), (1, 2));
        assert!(LassoSpec::custom(p.clone(), Matrix::zeros(1, 3), None).is_err());
        assert!(LassoSpec::custom(Matrix::from_element(1, 1, 2.0), Matrix::identity(1, 1), None).is_err());
        assert!(LassoSpec::custom(p, h, Some((0, 2))).is_err());
        assert!(lasso_matrices(1, 0, 1).is_err());
    }
}
