//! Conforming triangulations of the unit disc and of convex polygons.

mod generate;
mod io;
pub mod quadrature;

pub use generate::{make_disc_mesh, make_polygon_mesh, refine_uniform};
pub use io::{read_mesh, write_mesh};
pub use quadrature::{gauss_legendre, triangle_quadrature, QuadratureRule};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Which continuous domain a mesh discretizes; decides whether refinement
/// snaps new boundary vertices back onto the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshDomain {
    UnitDisc,
    Polygon,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    dof: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
    h_max: f64,
    domain: MeshDomain,
}

/// Undirected edge key with the smaller index first.
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl TriMesh {
    /// Builds a mesh and checks every structural invariant. Boundary flags
    /// and the interior numbering are derived from the connectivity.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: MeshDomain) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!("triangle {t} references vertex {v}")));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive area {area:e}")));
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }

        // Directed edges must be unique; an undirected edge may belong to at
        // most two triangles, and then with opposite orientations.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) used twice with the same orientation",
                        e.0, e.1
                    )));
                }
            }
        }
        let mut boundary = vec![false; nv];
        let mut n_edges = 0usize;
        let mut boundary_next: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            if a < b || !directed.contains_key(&(b, a)) {
                n_edges += 1;
            }
            if !directed.contains_key(&(b, a)) {
                boundary[a] = true;
                boundary[b] = true;
                if boundary_next.insert(a, b).is_some() {
                    return Err(Error::InvalidMesh(format!("boundary is pinched at vertex {a}")));
                }
            }
        }

        // A triangulated disc has Euler characteristic 1 and a single
        // boundary loop; together with the edge checks this rules out
        // overlapping sheets.
        let euler = nv as i64 - n_edges as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!("Euler characteristic {euler}, expected 1")));
        }
        let &start = boundary_next
            .keys()
            .min()
            .ok_or_else(|| Error::InvalidMesh("no boundary".into()))?;
        let mut cur = start;
        let mut loop_len = 0;
        loop {
            cur = boundary_next[&cur];
            loop_len += 1;
            if cur == start || loop_len > boundary_next.len() {
                break;
            }
        }
        if cur != start || loop_len != boundary_next.len() {
            return Err(Error::InvalidMesh("boundary is not a single closed loop".into()));
        }
        let total: f64 = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .sum();
        let mut enclosed = 0.0;
        let mut cur = start;
        loop {
            let next = boundary_next[&cur];
            enclosed += 0.5 * (vertices[cur][0] * vertices[next][1] - vertices[next][0] * vertices[cur][1]);
            cur = next;
            if cur == start {
                break;
            }
        }
        if (total - enclosed).abs() > 1e-9 * total.abs().max(1e-300) {
            return Err(Error::InvalidMesh(format!(
                "triangles cover area {total} but the boundary encloses {enclosed}"
            )));
        }

        let mut dof = vec![None; nv];
        let mut interior_vertices = Vec::new();
        for v in 0..nv {
            if !boundary[v] {
                dof[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }
        let h_max = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i]);
                dist(a, b).max(dist(b, c)).max(dist(a, c))
            })
            .fold(0.0, f64::max);
        Ok(TriMesh {
            vertices,
            triangles,
            boundary,
            dof,
            interior_vertices,
            h_max,
            domain,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Interior DOF index of vertex `v`, or `None` on the boundary.
    pub fn dof(&self, v: usize) -> Option<usize> {
        self.dof[v]
    }

    pub fn dof_map(&self) -> &[Option<usize>] {
        &self.dof
    }

    /// Vertex index for every interior DOF.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn domain(&self) -> MeshDomain {
        self.domain
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        dist(a, b).max(dist(b, c)).max(dist(a, c))
    }

    pub fn min_diameter(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.diameter(t)).fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Physical point for barycentric coordinates on triangle `t`.
    pub fn map_point(&self, t: usize, bary: &[f64; 3]) -> Point {
        let [a, b, c] = self.corners(t);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// True if any vertex of triangle `t` lies on the boundary.
    pub fn touches_boundary(&self, t: usize) -> bool {
        self.triangles[t].iter().any(|&v| self.boundary[v])
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.corners(t);
        let two_area = 2.0 * signed_area(a, b, c);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// Boundary vertices in counter-clockwise order.
    pub fn boundary_loop(&self) -> Vec<usize> {
        let mut next = HashMap::new();
        let mut directed = std::collections::HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]));
            }
        }
        for &(a, b) in &directed {
            if !directed.contains(&(b, a)) {
                next.insert(a, b);
            }
        }
        let start = *next.keys().min().expect("validated mesh has a boundary");
        let mut out = vec![start];
        let mut cur = next[&start];
        while cur != start {
            out.push(cur);
            cur = next[&cur];
        }
        out
    }

    /// Boundary polygon in counter-clockwise order.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        self.boundary_loop().into_iter().map(|v| self.vertices[v]).collect()
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Interior P1 interpolant of `g` (boundary values dropped).
    pub fn interpolate(&self, g: impl Fn(Point) -> f64) -> Vec<f64> {
        self.interior_vertices.iter().map(|&v| g(self.vertices[v])).collect()
    }

    /// Evaluates the P1 function with interior coefficients `u` at
    /// barycentric point `bary` of triangle `t`.
    pub fn eval_p1(&self, u: &[f64], t: usize, bary: &[f64; 3]) -> f64 {
        self.triangles[t]
            .iter()
            .zip(bary)
            .map(|(&v, &l)| self.dof[v].map_or(0.0, |i| l * u[i]))
            .sum()
    }

    /// Local interior coefficients of `u` on triangle `t` (zero at boundary vertices).
    pub fn local_values(&self, u: &[f64], t: usize) -> [f64; 3] {
        self.triangles[t].map(|v| self.dof[v].map_or(0.0, |i| u[i]))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Checks the four structural invariants independently of the constructor.
    pub(crate) fn assert_mesh_invariants(mesh: &TriMesh) {
        for t in 0..mesh.n_triangles() {
            assert!(mesh.area(t) > 0.0, "triangle {t} not positively oriented");
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in mesh.triangles() {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        assert!(count.values().all(|&c| c <= 2), "edge shared by more than two triangles");
        let mut on_boundary_edge = vec![false; mesh.n_vertices()];
        for (&(a, b), &c) in &count {
            if c == 1 {
                on_boundary_edge[a] = true;
                on_boundary_edge[b] = true;
            }
        }
        assert_eq!(on_boundary_edge, mesh.boundary_flags());
        let mut seen = vec![false; mesh.n_interior()];
        for v in 0..mesh.n_vertices() {
            match mesh.dof(v) {
                Some(i) => {
                    assert!(!mesh.is_boundary(v));
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(mesh.interior_vertices()[i], v);
                }
                None => assert!(mesh.is_boundary(v)),
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    fn square() -> (Vec<Point>, Vec<[usize; 3]>) {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        (v, t)
    }

    #[test]
    fn accepts_a_valid_square_fan() {
        let (v, t) = square();
        let m = TriMesh::new(v, t, MeshDomain::Polygon).unwrap();
        assert_mesh_invariants(&m);
        assert_eq!(m.n_interior(), 1);
        assert_eq!(m.dof(4), Some(0));
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_loop(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_clockwise_triangles() {
        let (v, mut t) = square();
        t[0] = [0, 4, 1];
        assert!(matches!(TriMesh::new(v, t, MeshDomain::Polygon), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_overlapping_triangles() {
        let (v, mut t) = square();
        t.push([0, 1, 2]);
        assert!(TriMesh::new(v, t, MeshDomain::Polygon).is_err());
    }

    #[test]
    fn rejects_dangling_vertices_and_bad_indices() {
        let (mut v, t) = square();
        v.push([3.0, 3.0]);
        assert!(TriMesh::new(v.clone(), t.clone(), MeshDomain::Polygon).is_err());
        let mut t2 = t;
        t2[0] = [0, 1, 99];
        assert!(TriMesh::new(v, t2, MeshDomain::Polygon).is_err());
    }

    #[test]
    fn barycentric_gradients_reproduce_linear_functions() {
        let (v, t) = square();
        let m = TriMesh::new(v, t, MeshDomain::Polygon).unwrap();
        let g = m.barycentric_gradients(1);
        let sum = [g[0][0] + g[1][0] + g[2][0], g[0][1] + g[1][1] + g[2][1]];
        assert!(sum[0].abs() < 1e-14 && sum[1].abs() < 1e-14);
        let c = m.corners(1);
        for (k, gk) in g.iter().enumerate() {
            for (j, p) in c.iter().enumerate() {
                // λ_k(p_j) - λ_k(p_0) = ∇λ_k · (p_j - p_0)
                let d = gk[0] * (p[0] - c[0][0]) + gk[1] * (p[1] - c[0][1]);
                let expect = f64::from(u8::from(k == j)) - f64::from(u8::from(k == 0));
                assert!((d - expect).abs() < 1e-14);
            }
        }
    }
}
