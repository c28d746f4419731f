//! Unrestarted GMRES in a diagonally weighted inner product.

use crate::error::{Error, Result};

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
}

/// Solves `op(x) = b` to `‖op(x) − b‖_w ≤ tol ‖b‖_w`, where
/// `‖v‖²_w = Σ w_i v_i²`. Returns the iterate and the number of products.
pub fn gmres(
    op: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    let beta = dot(weights, b, b).sqrt();
    if beta == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    // Hessenberg columns after the Givens rotations, and the rotated rhs.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rots: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut steps = 0;
    for j in 0..max_iter.min(n) {
        let mut v = op(&basis[j])?;
        steps += 1;
        let mut h = Vec::with_capacity(j + 2);
        for q in &basis {
            let c = dot(weights, &v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            h.push(c);
        }
        let hn = dot(weights, &v, &v).sqrt();
        h.push(hn);
        for (i, &(c, s)) in rots.iter().enumerate() {
            let (x, y) = (h[i], h[i + 1]);
            h[i] = c * x + s * y;
            h[i + 1] = -s * x + c * y;
        }
        let (x, y) = (h[j], h[j + 1]);
        let r = x.hypot(y);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) };
        h[j] = r;
        h[j + 1] = 0.0;
        rots.push((c, s));
        g.push(-s * g[j]);
        g[j] *= c;
        h.truncate(j + 1);
        r_cols.push(h);
        let done = g[j + 1].abs() <= tol * beta || hn <= 1e-14 * beta;
        if !done {
            basis.push(v.iter().map(|x| x / hn).collect());
        }
        if done || j + 1 == max_iter.min(n) {
            let m = j + 1;
            let mut y = vec![0.0; m];
            for i in (0..m).rev() {
                let s: f64 = (i + 1..m).map(|k| r_cols[k][i] * y[k]).sum();
                if r_cols[i][i] == 0.0 {
                    return Err(Error::SolveFailed(f64::INFINITY));
                }
                y[i] = (g[i] - s) / r_cols[i][i];
            }
            let mut x = vec![0.0; n];
            for (yk, q) in y.iter().zip(&basis) {
                x.iter_mut().zip(q).for_each(|(a, b)| *a += yk * b);
            }
            if !done {
                return Err(Error::SolveFailed(g[j + 1].abs() / beta));
            }
            return Ok((x, steps));
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [-2.0, 3.0, 1.0], [0.5, 0.0, 2.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x_true).map(|(u, v)| u * v).sum()).collect();
        let mut op = |v: &[f64]| -> Result<Vec<f64>> { Ok(a.iter().map(|r| r.iter().zip(v).map(|(u, w)| u * w).sum()).collect()) };
        let (x, steps) = gmres(&mut op, &b, &[1.0, 2.0, 0.5], 1e-13, 10).unwrap();
        assert!(steps <= 3);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = [1.0, 2.0, 3.0, 4.0];
        let mut op = |v: &[f64]| -> Result<Vec<f64>> { Ok(v.to_vec()) };
        let (x, steps) = gmres(&mut op, &b, &[1.0; 4], 1e-12, 10).unwrap();
        assert_eq!(steps, 1);
        assert!(x.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-14));
    }
}
