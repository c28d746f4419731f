//! Brute-force evaluation of `A(φ_i, φ_j)` that shares no code with the
//! assembler beyond the mesh and Gauss–Legendre nodes.
//!
//! With `S = supp φ_i ∪ supp φ_j`,
//! `∬_{ℝ²×ℝ²} F = ∫_S [∫_S F(x, y) dy + 2 φ_i φ_j(x) ω_S(x)] dx`, where
//! `ω_S(x) = ∫_{ℝ²∖S} |x − y|^{−2−2s} dy`. For fixed `x` both inner
//! integrals are computed along rays from `x`: the basis functions are
//! linear on each triangle a ray crosses, so the radial integrals are
//! elementary. The angular integral is split at the directions of the
//! vertices of `S`, and the outer integral uses rules graded towards edges
//! and corners, where the inner integral is only Hölder continuous.

#![allow(dead_code)]

use fraclap::mesh::{gauss_legendre, Point, TriMesh};
use statrs::function::gamma::gamma;

pub struct RayOracle {
    pub s: f64,
    pub n_theta: usize,
    pub n_x: usize,
    pub grading: i32,
}

impl RayOracle {
    pub fn new(s: f64) -> Self {
        RayOracle {
            s,
            n_theta: 10,
            n_x: 8,
            grading: 4,
        }
    }
}

fn constant(s: f64) -> f64 {
    4f64.powf(s) * s * gamma(s + 1.0) / (std::f64::consts::PI * gamma(1.0 - s))
}

/// Affine data of a triangle: vertices, barycentric gradients and offsets so
/// that `λ_k(y) = c_k + g_k · y`.
struct Patch {
    verts: [usize; 3],
    corners: [Point; 3],
    grads: [[f64; 2]; 3],
    offs: [f64; 3],
}

impl Patch {
    fn new(mesh: &TriMesh, t: usize) -> Self {
        let verts = mesh.triangles()[t];
        let corners = verts.map(|v| mesh.vertices()[v]);
        let [a, b, c] = corners;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let mut grads = [[0.0; 2]; 3];
        let mut offs = [0.0; 3];
        for k in 0..3 {
            let p = corners[(k + 1) % 3];
            let q = corners[(k + 2) % 3];
            // λ_k vanishes on the line p–q and equals 1 at corner k.
            grads[k] = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
            offs[k] = -(grads[k][0] * p[0] + grads[k][1] * p[1]);
        }
        Patch {
            verts,
            corners,
            grads,
            offs,
        }
    }

    /// Affine coefficients `(c, g)` of the hat of vertex `v` on this triangle.
    fn hat(&self, v: usize) -> (f64, [f64; 2]) {
        match self.verts.iter().position(|&w| w == v) {
            Some(k) => (self.offs[k], self.grads[k]),
            None => (0.0, [0.0, 0.0]),
        }
    }

    /// Parameter interval `[lo, hi]` (with `lo ≥ 0`) of the ray `x + ρe` inside the triangle.
    fn ray_interval(&self, x: Point, e: Point) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for k in 0..3 {
            let l0 = self.offs[k] + self.grads[k][0] * x[0] + self.grads[k][1] * x[1];
            let dl = self.grads[k][0] * e[0] + self.grads[k][1] * e[1];
            if dl.abs() < 1e-300 {
                if l0 < 0.0 {
                    return None;
                }
            } else if dl > 0.0 {
                lo = lo.max(-l0 / dl);
            } else {
                hi = hi.min(-l0 / dl);
            }
        }
        (hi > lo).then_some((lo, hi))
    }
}

/// `∫_{r0}^{r1} ρ^p dρ`, with `r0 = 0` allowed when `p > −1`.
fn power_integral(p: f64, r0: f64, r1: f64) -> f64 {
    if (p + 1.0).abs() < 1e-12 {
        (r1 / r0).ln()
    } else {
        (r1.powf(p + 1.0) - r0.powf(p + 1.0)) / (p + 1.0)
    }
}

impl RayOracle {
    /// `A(φ_vi, φ_vj)` for two vertices of `mesh`.
    pub fn entry(&self, mesh: &TriMesh, vi: usize, vj: usize) -> f64 {
        let vt = mesh.vertex_triangles();
        let mut support: Vec<usize> = vt[vi].iter().chain(&vt[vj]).copied().collect();
        support.sort_unstable();
        support.dedup();
        let patches: Vec<Patch> = support.iter().map(|&t| Patch::new(mesh, t)).collect();
        let mut sverts: Vec<usize> = patches.iter().flat_map(|p| p.verts).collect();
        sverts.sort_unstable();
        sverts.dedup();
        let svpts: Vec<Point> = sverts.iter().map(|&v| mesh.vertices()[v]).collect();

        let mut total = 0.0;
        for p in &patches {
            for (x, w) in graded_points(p.corners, self.n_x, self.grading) {
                total += w * self.inner(&patches, &svpts, vi, vj, x);
            }
        }
        0.5 * constant(self.s) * total
    }

    fn inner(&self, patches: &[Patch], svpts: &[Point], vi: usize, vj: usize, x: Point) -> f64 {
        let s = self.s;
        let hat_at = |v: usize| -> f64 {
            for p in patches {
                let lam: Vec<f64> = (0..3)
                    .map(|k| p.offs[k] + p.grads[k][0] * x[0] + p.grads[k][1] * x[1])
                    .collect();
                if lam.iter().all(|&l| l >= -1e-14) {
                    let (c, g) = p.hat(v);
                    return c + g[0] * x[0] + g[1] * x[1];
                }
            }
            0.0
        };
        let (fi, fj) = (hat_at(vi), hat_at(vj));
        let mut cuts: Vec<f64> = svpts
            .iter()
            .map(|v| (v[1] - x[1]).atan2(v[0] - x[0]).rem_euclid(std::f64::consts::TAU))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        cuts.push(cuts[0] + std::f64::consts::TAU);
        let (gx, gw) = gauss_legendre(self.n_theta);

        let mut acc = 0.0;
        let mut segs: Vec<(f64, f64, usize)> = Vec::with_capacity(patches.len());
        for arc in cuts.windows(2) {
            let len = arc[1] - arc[0];
            for (&u, &wu) in gx.iter().zip(&gw) {
                let th = arc[0] + u * len;
                let e = [th.cos(), th.sin()];
                segs.clear();
                for (k, p) in patches.iter().enumerate() {
                    if let Some((lo, hi)) = p.ray_interval(x, e) {
                        segs.push((lo, hi, k));
                    }
                }
                segs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut val = 0.0;
                // Part of the ray outside S, where F = φ_i φ_j(x) k.
                let mut outside = 0.0;
                let mut reach = 0.0f64;
                for &(lo, hi, k) in &segs {
                    // Segments of adjacent triangles meet up to round-off in
                    // the edge crossings; only genuine gaps, where the ray
                    // leaves a non-convex S, count as outside.
                    if lo - reach > 1e-10 && reach > 0.0 {
                        outside += power_integral(-1.0 - 2.0 * s, reach, lo);
                    }
                    reach = reach.max(hi);
                    let p = &patches[k];
                    let (ci, gi) = p.hat(vi);
                    let (cj, gj) = p.hat(vj);
                    // φ(x + ρe) = α + βρ on this triangle.
                    let (ai, bi) = (ci + gi[0] * x[0] + gi[1] * x[1], gi[0] * e[0] + gi[1] * e[1]);
                    let (aj, bj) = (cj + gj[0] * x[0] + gj[1] * x[1], gj[0] * e[0] + gj[1] * e[1]);
                    let (di, dj) = if lo == 0.0 { (0.0, 0.0) } else { (fi - ai, fj - aj) };
                    // (di − bi ρ)(dj − bj ρ) ρ^{−1−2s}
                    val += bi * bj * power_integral(1.0 - 2.0 * s, lo, hi);
                    if lo > 0.0 {
                        val += di * dj * power_integral(-1.0 - 2.0 * s, lo, hi)
                            - (di * bj + dj * bi) * power_integral(-2.0 * s, lo, hi);
                    }
                }
                outside += reach.powf(-2.0 * s) / (2.0 * s);
                acc += wu * len * (val + 2.0 * fi * fj * outside);
            }
        }
        acc
    }
}

/// Points and weights on a triangle, split into three sub-triangles at the
/// centroid; each is parametrized from the centroid to one edge and graded
/// towards that edge and its two end points.
fn graded_points(c: [Point; 3], n: usize, p: i32) -> Vec<(Point, f64)> {
    let g = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
    let (gx, gw) = gauss_legendre(n);
    let pf = f64::from(p);
    let mut out = Vec::new();
    for k in 0..3 {
        let a = c[k];
        let b = c[(k + 1) % 3];
        let sub_area = 0.5 * ((a[0] - g[0]) * (b[1] - g[1]) - (a[1] - g[1]) * (b[0] - g[0])).abs();
        for (&v, &wv) in gx.iter().zip(&gw) {
            // r = 1 − v^p runs from the edge (v = 0) to the centroid.
            let r = 1.0 - v.powi(p);
            let dr = pf * v.powi(p - 1) * wv;
            for half in 0..2 {
                for (&u, &wu) in gx.iter().zip(&gw) {
                    let d = 0.5 * u.powi(p);
                    let dd = 0.5 * pf * u.powi(p - 1) * wu;
                    let tau = if half == 0 { d } else { 1.0 - d };
                    let q = [a[0] + tau * (b[0] - a[0]), a[1] + tau * (b[1] - a[1])];
                    let x = [g[0] + r * (q[0] - g[0]), g[1] + r * (q[1] - g[1])];
                    out.push((x, 2.0 * sub_area * r * dr * dd));
                }
            }
        }
    }
    out
}
