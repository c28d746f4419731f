//! Gauss–Legendre rules on the unit interval and quadrature rules on the
//! reference triangle in barycentric form.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`; weights sum to 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the larger root of the symmetric pair.
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

/// Quadrature rule on the reference triangle. Points are barycentric triples
/// and the weights are relative to the triangle area (they sum to one), so
/// `∫_T g ≈ |T| Σ_k w_k g(x_k)` for any triangle `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn symmetric(degree: usize, orbits: &[(f64, f64)], centroid: Option<f64>) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if let Some(w) = centroid {
            points.push([1.0 / 3.0; 3]);
            weights.push(w);
        }
        for &(a, w) in orbits {
            let b = 1.0 - 2.0 * a;
            points.extend([[b, a, a], [a, b, a], [a, a, b]]);
            weights.extend([w; 3]);
        }
        QuadratureRule {
            degree,
            points,
            weights,
        }
    }

    /// Collapsed (Duffy) tensor Gauss–Legendre rule with `n` nodes per
    /// direction; exact up to total degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&u, &wu) in x.iter().zip(&w) {
            for (&v, &wv) in x.iter().zip(&w) {
                let px = u;
                let py = v * (1.0 - u);
                points.push([1.0 - px - py, px, py]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        QuadratureRule {
            degree: 2 * n - 2,
            points,
            weights,
        }
    }
}

/// Rule exact for bivariate polynomials of total degree `degree` (1..=10).
pub fn triangle_quadrature(degree: usize) -> Result<QuadratureRule> {
    let rule = match degree {
        1 => QuadratureRule::symmetric(1, &[], Some(1.0)),
        2 => QuadratureRule::symmetric(2, &[(1.0 / 6.0, 1.0 / 3.0)], None),
        3 | 4 => QuadratureRule::symmetric(
            degree,
            &[
                (0.445_948_490_915_964_9, 0.223_381_589_678_011_47),
                (0.091_576_213_509_770_74, 0.109_951_743_655_321_87),
            ],
            None,
        ),
        5 => {
            let r15 = 15f64.sqrt();
            QuadratureRule::symmetric(
                5,
                &[
                    ((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0),
                    ((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0),
                ],
                Some(9.0 / 40.0),
            )
        }
        6..=10 => {
            let mut r = QuadratureRule::collapsed((degree + 3) / 2);
            r.degree = degree;
            r
        }
        _ => return Err(Error::UnsupportedDegree(degree)),
    };
    Ok(rule)
}
