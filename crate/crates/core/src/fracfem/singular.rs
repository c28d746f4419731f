//! Double integrals over pairs of triangles that share a vertex, an edge or
//! coincide, for the integrand
//!
//! ```text
//! (φ_a(x) − φ_a(y)) (φ_b(x) − φ_b(y)) |x − y|^{−2−2s}
//! ```
//!
//! with P1 hat functions. In every case the integration variables are
//! rescaled so that the singular direction factors out as a power that is
//! integrated in closed form; what remains is smooth and handled with
//! tensor Gauss–Legendre rules.

use crate::mesh::{gauss_legendre, Point};

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2(v: Point) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
}

/// Local matrix over the union of the vertices of a pair of triangles.
#[derive(Debug, Clone)]
pub struct PairMatrix {
    pub vertices: Vec<usize>,
    pub values: Vec<f64>,
}

impl PairMatrix {
    fn new(vertices: Vec<usize>) -> Self {
        let n = vertices.len();
        PairMatrix {
            vertices,
            values: vec![0.0; n * n],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.vertices.len() + b]
    }

    fn add_outer(&mut self, d: &[f64], w: f64) {
        let n = self.vertices.len();
        for a in 0..n {
            let wa = w * d[a];
            for b in 0..n {
                self.values[a * n + b] += wa * d[b];
            }
        }
    }
}

pub struct SingularRules {
    s: f64,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    arc_nodes: Vec<f64>,
    arc_weights: Vec<f64>,
}

impl SingularRules {
    pub fn new(s: f64, n: usize) -> Self {
        let (gl_nodes, gl_weights) = gauss_legendre(n);
        let (arc_nodes, arc_weights) = gauss_legendre(3 * n);
        SingularRules {
            s,
            gl_nodes,
            gl_weights,
            arc_nodes,
            arc_weights,
        }
    }

    fn kernel(&self, r2: f64) -> f64 {
        r2.powf(-1.0 - self.s)
    }

    /// `T × T`. Since φ_a is affine on `T`, the integrand depends on `x − y`
    /// only; the overlap area `|T ∩ (T + r)| = |T| (1 − r σ(e))²` turns the
    /// radial integral into a Beta function and leaves an angular integral
    /// that is smooth between the directions parallel to the edges.
    pub fn identical(&self, ids: [usize; 3], p: [Point; 3]) -> PairMatrix {
        let s = self.s;
        let area = tri_area(p[0], p[1], p[2]);
        let two_area = 2.0 * area;
        // Barycentric gradients (orientation-independent up to a shared sign,
        // which cancels in products).
        let g = [
            [(p[1][1] - p[2][1]) / two_area, (p[2][0] - p[1][0]) / two_area],
            [(p[2][1] - p[0][1]) / two_area, (p[0][0] - p[2][0]) / two_area],
            [(p[0][1] - p[1][1]) / two_area, (p[1][0] - p[0][0]) / two_area],
        ];
        let mut cuts: Vec<f64> = g
            .iter()
            .map(|gk| (gk[1].atan2(gk[0]) + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.push(cuts[0] + std::f64::consts::PI);
        let mut out = PairMatrix::new(ids.to_vec());
        let mut d = [0.0; 3];
        for arc in cuts.windows(2) {
            let (lo, len) = (arc[0], arc[1] - arc[0]);
            for (&t, &w) in self.arc_nodes.iter().zip(&self.arc_weights) {
                let theta = lo + t * len;
                let e = [theta.cos(), theta.sin()];
                let mut sigma = 0.0;
                for k in 0..3 {
                    d[k] = g[k][0] * e[0] + g[k][1] * e[1];
                    sigma += d[k].max(0.0);
                }
                out.add_outer(&d, w * len * sigma.powf(2.0 * s - 2.0));
            }
        }
        // e ↦ −e symmetry doubles the half-turn; B(2−2s, 3) from the radial part.
        let beta = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s));
        let scale = 2.0 * area * beta;
        out.values.iter_mut().for_each(|v| *v *= scale);
        out
    }

    /// Ordered pair sharing the edge `pq`; `r` is the third vertex of the
    /// first triangle and `r2` that of the second.
    ///
    /// With `x = P + x1 (Q−P) + x2 (R−P)`, `y = P + y1 (Q−P) + y2 (R'−P)` the
    /// integrand depends only on `t = (x2, y2, y1 − x1)`. Writing `t = λ ω`
    /// with `‖ω‖₁ = 1`, the `λ` and `x1` integrals are done exactly and yield
    /// `M(ω)^{−(3−2s)} / ((3−2s)(4−2s))`, leaving a smooth integral over the
    /// two faces of the ℓ¹ sphere, split where `M` has a kink.
    pub fn edge(&self, ids: [usize; 4], pq: [Point; 2], r: Point, r2: Point) -> PairMatrix {
        let s = self.s;
        let [p, q] = pq;
        let eq = sub(q, p);
        let er = sub(r, p);
        let er2 = sub(r2, p);
        let scale = 4.0 * tri_area(p, q, r) * tri_area(p, q, r2) / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s));
        let mut out = PairMatrix::new(ids.to_vec());
        let expo = -(3.0 - 2.0 * s);
        let mut d = [0.0; 4];
        // (face sign of ω_z, which coordinate carries the kink, kink side)
        for face in [1.0f64, -1.0] {
            for half in 0..2 {
                let (lo, hi) = if half == 0 { (0.0, 0.5) } else { (0.5, 1.0) };
                for (&ta, &wa) in self.gl_nodes.iter().zip(&self.gl_weights) {
                    let u = lo + ta * (hi - lo);
                    let wu = wa * (hi - lo);
                    for (&tb, &wb) in self.gl_nodes.iter().zip(&self.gl_weights) {
                        let v = tb * (1.0 - u);
                        let w = wu * wb * (1.0 - u);
                        // On the positive face the kink is in ω2, on the
                        // negative face in ω2'.
                        let (w2, w2p) = if face > 0.0 { (u, v) } else { (v, u) };
                        let wz = face * (1.0 - w2 - w2p);
                        let m = u.max(1.0 - u);
                        d[0] = wz + w2p - w2;
                        d[1] = -wz;
                        d[2] = w2;
                        d[3] = -w2p;
                        let x = [
                            -wz * eq[0] + w2 * er[0] - w2p * er2[0],
                            -wz * eq[1] + w2 * er[1] - w2p * er2[1],
                        ];
                        out.add_outer(&d, scale * w * self.kernel(norm2(x)) * m.powf(expo));
                    }
                }
            }
        }
        out
    }

    /// Ordered pair sharing only the vertex `p`; `(v1, v2)` are the other
    /// vertices of the first triangle and `(w1, w2)` of the second.
    ///
    /// Both triangles are written in polar-like coordinates around `p`,
    /// `x = p + ξ a(η)`, `y = p + ζ b(μ)`; splitting `ξ ≥ ζ` / `ζ ≥ ξ` and
    /// scaling the smaller radius by the larger one isolates a factor
    /// `ξ^{3−2s}` that integrates to `1/(4−2s)`.
    pub fn vertex(&self, ids: [usize; 5], p: Point, v: [Point; 2], w: [Point; 2]) -> PairMatrix {
        let s = self.s;
        let (a1, a2) = (sub(v[0], p), sub(v[1], p));
        let (b1, b2) = (sub(w[0], p), sub(w[1], p));
        let scale = 4.0 * tri_area(p, v[0], v[1]) * tri_area(p, w[0], w[1]) / (4.0 - 2.0 * s);
        let mut out = PairMatrix::new(ids.to_vec());
        let mut d = [0.0; 5];
        let nodes = &self.gl_nodes;
        let weights = &self.gl_weights;
        for (&t, &wt) in nodes.iter().zip(weights) {
            for (&eta, &we) in nodes.iter().zip(weights) {
                let a = [(1.0 - eta) * a1[0] + eta * a2[0], (1.0 - eta) * a1[1] + eta * a2[1]];
                for (&mu, &wm) in nodes.iter().zip(weights) {
                    let b = [(1.0 - mu) * b1[0] + mu * b2[0], (1.0 - mu) * b1[1] + mu * b2[1]];
                    let base = scale * wt * we * wm * t;
                    // ξ ≥ ζ = t ξ
                    d[0] = t - 1.0;
                    d[1] = 1.0 - eta;
                    d[2] = eta;
                    d[3] = -t * (1.0 - mu);
                    d[4] = -t * mu;
                    let r = [a[0] - t * b[0], a[1] - t * b[1]];
                    out.add_outer(&d, base * self.kernel(norm2(r)));
                    // ζ ≥ ξ = t ζ
                    d[0] = 1.0 - t;
                    d[1] = t * (1.0 - eta);
                    d[2] = t * eta;
                    d[3] = -(1.0 - mu);
                    d[4] = -mu;
                    let r = [t * a[0] - b[0], t * a[1] - b[1]];
                    out.add_outer(&d, base * self.kernel(norm2(r)));
                }
            }
        }
        out
    }
}
