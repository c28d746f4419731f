//! Dense SPD solves and a matrix-free conjugate gradient.

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::cholesky::llt;
use faer::{Mat, Par};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sequential blocked Cholesky factor `A = L Lᵀ`.
pub struct CholeskyFactor {
    l: Mat<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let mut l = Mat::from_fn(n, n, |i, j| a[(i, j)]);
        let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
        llt::factor::cholesky_in_place(l.as_mut(), Default::default(), Par::Seq, MemStack::new(&mut buf), Default::default())
            .map_err(|_| Error::NotPositiveDefinite)?;
        Ok(CholeskyFactor { l })
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let mut buf = MemBuffer::new(StackReq::EMPTY);
        llt::solve::solve_in_place(self.l.as_ref(), x.as_mut(), Par::Seq, MemStack::new(&mut buf));
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Relative residual every linear solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky solve of `a x = b` with a residual check.
pub fn spd_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let x = DVector::from_vec(CholeskyFactor::new(a)?.solve(b));
    let res = (a * &x - DVector::from_column_slice(b)).norm() / bnorm;
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::SolveFailed(res));
    }
    Ok(x.iter().copied().collect())
}

/// Conjugate gradient for an SPD operator given by its action. Stops when
/// `‖op(x) − b‖ ≤ tol ‖b‖`.
pub fn conjugate_gradient(op: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = op(&p);
        if ap.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ap.len() });
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // Recompute the true residual before giving up.
    let ax = op(&x);
    let res = norm(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>()) / bnorm;
    if res <= tol {
        Ok(x)
    } else {
        Err(Error::SolveFailed(res))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose() + DMatrix::identity(n, n) * n as f64 * 0.1
    }

    #[test]
    fn identity_returns_rhs() {
        let b = [1.0, -2.0, 3.5];
        assert_eq!(spd_solve(&DMatrix::identity(3, 3), &b).unwrap(), b.to_vec());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        assert_eq!(spd_solve(&random_spd(4, 1), &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn constructed_solution_is_recovered() {
        let a = random_spd(10, 42);
        let b: Vec<f64> = (&a * DVector::from_element(10, 1.0)).iter().copied().collect();
        for x in spd_solve(&a, &b).unwrap() {
            assert!((x - 1.0).abs() < 1e-9);
        }
        let op = |v: &[f64]| (&a * DVector::from_column_slice(v)).iter().copied().collect();
        for x in conjugate_gradient(op, &b, RESIDUAL_TOL, 100).unwrap() {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_and_mismatched_inputs_fail() {
        let mut a = DMatrix::identity(3, 3);
        a[(1, 1)] = -1.0;
        assert!(matches!(spd_solve(&a, &[1.0, 1.0, 1.0]), Err(Error::NotPositiveDefinite)));
        assert!(matches!(spd_solve(&a, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }
}
