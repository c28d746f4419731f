//! Assembly of the dense nonlocal stiffness matrix.
//!
//! The double integral over `Ω × Ω` is split into ordered element pairs.
//! Pairs that touch (same triangle, shared edge, shared vertex) are handled
//! by [`SingularRules`]. For the rest the symmetric integrand is rewritten as
//! `2 [φ_i φ_j(x) − φ_i(x) φ_j(y)] k(x, y)`, which sums to the same total over
//! both orders of a pair and only touches rows of the first triangle, so each
//! element can be processed independently. The interaction with `ℝ² ∖ Ω`
//! becomes `2 ∫_Ω φ_i φ_j ω` with the complement weight of the mesh polygon;
//! `ω` grows like `dist(x, ∂Ω)^{−2s}`, so this term gets its own, finer rules.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::complement::{complement_weight, DomainDescriptor};
use super::singular::{PairMatrix, SingularRules};
use super::{AssemblyConfig, FracParams};
use crate::error::{Error, Result};
use crate::mesh::{signed_area, Point, QuadratureRule, TriMesh};

/// Elements per parallel batch. Results are reduced in element order, so
/// the matrix does not depend on the number of worker threads.
const BATCH: usize = 64;

/// Symmetric positive-definite matrix of `A(φ_i, φ_j)` on the interior DOFs.
#[derive(Debug, Clone)]
pub struct StiffnessMatrix {
    matrix: DMatrix<f64>,
    params: FracParams,
}

impl StiffnessMatrix {
    pub fn from_dense(matrix: DMatrix<f64>, params: FracParams) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(StiffnessMatrix { matrix, params })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn params(&self) -> FracParams {
        self.params
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(v.len(), n, "dimension mismatch in stiffness product");
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `√(vᵀ K v)`.
    pub fn energy_norm(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: v.len(),
            });
        }
        let q: f64 = v.iter().zip(self.apply(v)).map(|(a, b)| a * b).sum();
        if q < 0.0 {
            // Round-off can make an exact zero slightly negative.
            let scale = self.matrix.amax() * v.iter().map(|x| x * x).sum::<f64>();
            if q < -1e-12 * scale {
                return Err(Error::NegativeQuadraticForm(q));
            }
            return Ok(0.0);
        }
        Ok(q.sqrt())
    }

    /// Entries in `i j value` form, row-major, zeros included.
    pub fn write_triplets(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                let _ = writeln!(out, "{i} {j} {:.16e}", self.matrix[(i, j)]);
            }
        }
        out
    }
}

/// Quadrature points of one rule mapped to every triangle.
struct MappedRule {
    bary: Vec<[f64; 3]>,
    points: Vec<Vec<Point>>,
    weights: Vec<Vec<f64>>,
}

impl MappedRule {
    fn new(mesh: &TriMesh, rule: &QuadratureRule) -> Self {
        let mut points = Vec::with_capacity(mesh.n_triangles());
        let mut weights = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let area = mesh.area(t);
            points.push(rule.points.iter().map(|b| mesh.map_point(t, b)).collect());
            weights.push(rule.weights.iter().map(|w| w * area).collect());
        }
        MappedRule {
            bary: rule.points.clone(),
            points,
            weights,
        }
    }
}

struct Context<'a> {
    mesh: &'a TriMesh,
    s: f64,
    cfg: AssemblyConfig,
    singular: SingularRules,
    near: MappedRule,
    far: MappedRule,
    centroids: Vec<Point>,
    diameters: Vec<f64>,
    vertex_triangles: Vec<Vec<usize>>,
    polygon: DomainDescriptor,
    complement_inner: QuadratureRule,
    complement_boundary: QuadratureRule,
}

/// Rows of the unscaled matrix that belong to one element.
struct ElementRows {
    rows: [Option<usize>; 3],
    block: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
}

pub fn assemble_stiffness(mesh: &TriMesh, params: &FracParams, cfg: &AssemblyConfig) -> Result<StiffnessMatrix> {
    cfg.validate()?;
    let s = params.s;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let n = mesh.n_interior();
    if n == 0 {
        return Err(Error::NoInteriorDofs);
    }
    let polygon = mesh.boundary_polygon();
    check_convex(&polygon)?;
    let ctx = Context {
        mesh,
        s,
        cfg: *cfg,
        singular: SingularRules::new(s, cfg.quad_singular),
        near: MappedRule::new(mesh, &QuadratureRule::collapsed(cfg.quad_near)),
        far: MappedRule::new(mesh, &QuadratureRule::collapsed(cfg.quad_far)),
        centroids: (0..mesh.n_triangles()).map(|t| mesh.centroid(t)).collect(),
        diameters: (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).collect(),
        vertex_triangles: mesh.vertex_triangles(),
        polygon: DomainDescriptor::ConvexPolygon(polygon),
        complement_inner: QuadratureRule::collapsed(6),
        complement_boundary: QuadratureRule::collapsed(10),
    };

    let mut k = DMatrix::<f64>::zeros(n, n);
    let nt = mesh.n_triangles();
    for start in (0..nt).step_by(BATCH) {
        let end = (start + BATCH).min(nt);
        let parts: Vec<Result<ElementRows>> = (start..end).into_par_iter().map(|t| element_rows(&ctx, t)).collect();
        for part in parts {
            let part = part?;
            for (a, row) in part.rows.iter().enumerate() {
                if let Some(i) = *row {
                    let src = &part.block[a * n..(a + 1) * n];
                    for (j, v) in src.iter().enumerate() {
                        k[(i, j)] += v;
                    }
                }
            }
            for (i, j, v) in part.triplets {
                k[(i, j)] += v;
            }
        }
    }
    let scale = 0.5 * params.c_ds;
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * scale * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(StiffnessMatrix { matrix: k, params: *params })
}

fn check_convex(poly: &[Point]) -> Result<()> {
    let m = poly.len();
    for k in 0..m {
        let (a, b, c) = (poly[k], poly[(k + 1) % m], poly[(k + 2) % m]);
        let scale = (b[0] - a[0]).hypot(b[1] - a[1]) * (c[0] - b[0]).hypot(c[1] - b[1]);
        if signed_area(a, b, c) < -1e-12 * scale {
            return Err(Error::InvalidMesh("complement weight needs a convex boundary".into()));
        }
    }
    Ok(())
}

fn element_rows(ctx: &Context, t: usize) -> Result<ElementRows> {
    let mesh = ctx.mesh;
    let n = mesh.n_interior();
    let tri = mesh.triangles()[t];
    let rows = tri.map(|v| mesh.dof(v));
    let mut out = ElementRows {
        rows,
        block: vec![0.0; 3 * n],
        triplets: Vec::new(),
    };
    if rows.iter().all(Option::is_none) {
        // Rows of boundary vertices are not stored; touching pairs may still
        // contribute to interior rows through their other vertices.
        touching_pairs(ctx, t, &mut out.triplets);
        return Ok(out);
    }

    let mut touching: Vec<usize> = tri.iter().flat_map(|&v| ctx.vertex_triangles[v].iter().copied()).collect();
    touching.sort_unstable();
    touching.dedup();

    let neg_exp = -1.0 - ctx.s;
    let mut w_near = vec![0.0; ctx.near.bary.len()];
    let mut w_far = vec![0.0; ctx.far.bary.len()];
    let (px, pw) = (&ctx.near.points[t], &ctx.near.weights[t]);
    let (fx, fw) = (&ctx.far.points[t], &ctx.far.weights[t]);
    let ct = ctx.centroids[t];
    for t2 in 0..mesh.n_triangles() {
        if touching.binary_search(&t2).is_ok() {
            continue;
        }
        let c2 = ctx.centroids[t2];
        let dist = (ct[0] - c2[0]).hypot(ct[1] - c2[1]);
        let near = dist < ctx.cfg.near_distance * ctx.diameters[t].max(ctx.diameters[t2]);
        let (rule, xs, xw, acc) = if near {
            (&ctx.near, px, pw, &mut w_near)
        } else {
            (&ctx.far, fx, fw, &mut w_far)
        };
        let ys = &rule.points[t2];
        let yw = &rule.weights[t2];
        let mut cross = [[0.0; 3]; 3];
        for (q, (x, wx)) in xs.iter().zip(xw).enumerate() {
            let lx = rule.bary[q];
            let mut ky = [0.0; 3];
            let mut ksum = 0.0;
            for (r, (y, wy)) in ys.iter().zip(yw).enumerate() {
                let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                let kv = wy * d2.powf(neg_exp);
                ksum += kv;
                let ly = rule.bary[r];
                for b in 0..3 {
                    ky[b] += kv * ly[b];
                }
            }
            acc[q] += ksum;
            for a in 0..3 {
                for b in 0..3 {
                    cross[a][b] += wx * lx[a] * ky[b];
                }
            }
        }
        let cols = mesh.triangles()[t2].map(|v| mesh.dof(v));
        for a in 0..3 {
            if rows[a].is_none() {
                continue;
            }
            for b in 0..3 {
                if let Some(j) = cols[b] {
                    out.block[a * n + j] -= 2.0 * cross[a][b];
                }
            }
        }
    }

    // x-side of the split form together with the complement term.
    let mut local = [[0.0; 3]; 3];
    for (rule, acc) in [(&ctx.near, &w_near), (&ctx.far, &w_far)] {
        for (q, wsum) in acc.iter().enumerate() {
            let l = rule.bary[q];
            let wx = rule.weights[t][q];
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] += 2.0 * wx * wsum * l[a] * l[b];
                }
            }
        }
    }
    let crule = if mesh.touches_boundary(t) {
        &ctx.complement_boundary
    } else {
        &ctx.complement_inner
    };
    let area = mesh.area(t);
    for (l, w) in crule.points.iter().zip(&crule.weights) {
        let x = mesh.map_point(t, l);
        let omega = complement_weight(&ctx.polygon, x, ctx.s, ctx.cfg.n_angles)?;
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] += 2.0 * area * w * omega * l[a] * l[b];
            }
        }
    }
    for a in 0..3 {
        if rows[a].is_none() {
            continue;
        }
        for b in 0..3 {
            if let Some(j) = rows[b] {
                out.block[a * n + j] += local[a][b];
            }
        }
    }
    touching_pairs(ctx, t, &mut out.triplets);
    Ok(out)
}

/// Adds the exact-form integrals over every ordered pair `(t, t2)` with `t2`
/// touching `t`, including `t2 = t`.
fn touching_pairs(ctx: &Context, t: usize, triplets: &mut Vec<(usize, usize, f64)>) {
    let mesh = ctx.mesh;
    let tri = mesh.triangles()[t];
    let mut touching: Vec<usize> = tri.iter().flat_map(|&v| ctx.vertex_triangles[v].iter().copied()).collect();
    touching.sort_unstable();
    touching.dedup();
    let p = |v: usize| mesh.vertices()[v];
    let mut push = |m: PairMatrix| {
        let dofs: Vec<Option<usize>> = m.vertices.iter().map(|&v| mesh.dof(v)).collect();
        for (a, da) in dofs.iter().enumerate() {
            let Some(i) = *da else { continue };
            for (b, db) in dofs.iter().enumerate() {
                if let Some(j) = *db {
                    triplets.push((i, j, m.get(a, b)));
                }
            }
        }
    };
    for t2 in touching {
        let tri2 = mesh.triangles()[t2];
        let shared: Vec<usize> = tri.iter().copied().filter(|v| tri2.contains(v)).collect();
        match shared.len() {
            3 => push(ctx.singular.identical(tri, tri.map(p))),
            2 => {
                let r = *tri.iter().find(|v| !shared.contains(v)).unwrap();
                let r2 = *tri2.iter().find(|v| !shared.contains(v)).unwrap();
                let ids = [shared[0], shared[1], r, r2];
                push(ctx.singular.edge(ids, [p(shared[0]), p(shared[1])], p(r), p(r2)));
            }
            1 => {
                let c = shared[0];
                let v: Vec<usize> = tri.iter().copied().filter(|&x| x != c).collect();
                let w: Vec<usize> = tri2.iter().copied().filter(|&x| x != c).collect();
                let ids = [c, v[0], v[1], w[0], w[1]];
                push(ctx.singular.vertex(ids, p(c), [p(v[0]), p(v[1])], [p(w[0]), p(w[1])]));
            }
            _ => unreachable!("touching triangles share at least one vertex"),
        }
    }
}
