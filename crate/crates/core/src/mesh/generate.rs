use std::collections::HashMap;
use std::f64::consts::PI;

use super::{edge_key, signed_area, MeshDomain, Point, TriMesh};
use crate::error::{Error, Result};

/// Quasi-uniform triangulation of the polygon inscribed in the unit circle
/// with `n_boundary` equally spaced boundary vertices.
///
/// Vertices sit on concentric rings around the origin; consecutive rings are
/// stitched together (a fan around the origin for the first ring) and the
/// result is cleaned up with Delaunay edge flips.
pub fn make_disc_mesh(n_boundary: usize) -> Result<TriMesh> {
    if n_boundary < 8 {
        return Err(Error::InvalidMesh(format!(
            "disc mesh needs at least 8 boundary vertices, got {n_boundary}"
        )));
    }
    let rings = ((n_boundary as f64) / (2.0 * PI)).round().max(1.0) as usize;
    let mut vertices = vec![[0.0, 0.0]];
    let mut angles = vec![0.0];
    let mut ring_ids: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..=rings {
        let radius = k as f64 / rings as f64;
        let count = if k == rings {
            n_boundary
        } else {
            ((n_boundary * k) as f64 / rings as f64).round().max(3.0) as usize
        };
        // Stagger odd interior rings by half a spacing.
        let offset = if k % 2 == 1 && k != rings { PI / count as f64 } else { 0.0 };
        let mut ids = Vec::with_capacity(count);
        for j in 0..count {
            let theta = offset + 2.0 * PI * j as f64 / count as f64;
            let p = if k == rings {
                [theta.cos(), theta.sin()]
            } else {
                [radius * theta.cos(), radius * theta.sin()]
            };
            ids.push(vertices.len());
            vertices.push(p);
            angles.push(theta);
        }
        ring_ids.push(ids);
    }
    let triangles = stitch_rings(&vertices, &ring_ids, &angles);
    let triangles = delaunay_flips(&vertices, triangles);
    TriMesh::new(vertices, triangles, MeshDomain::UnitDisc)
}

/// Quasi-uniform triangulation of a convex counter-clockwise polygon with
/// target element size `h`, built from scaled copies of the boundary.
pub fn make_polygon_mesh(polygon: &[Point], h: f64) -> Result<TriMesh> {
    let n = polygon.len();
    if n < 3 {
        return Err(Error::InvalidMesh("polygon needs at least three corners".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidMesh(format!("target size {h} must be positive")));
    }
    for k in 0..n {
        let (a, b, c) = (polygon[k], polygon[(k + 1) % n], polygon[(k + 2) % n]);
        if signed_area(a, b, c) <= 0.0 {
            return Err(Error::InvalidMesh("polygon is not strictly convex and counter-clockwise".into()));
        }
    }
    let center = [
        polygon.iter().map(|p| p[0]).sum::<f64>() / n as f64,
        polygon.iter().map(|p| p[1]).sum::<f64>() / n as f64,
    ];
    let radius = polygon
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .fold(0.0, f64::max);
    let rings = (radius / h).round().max(1.0) as usize;
    let theta0 = (polygon[0][1] - center[1]).atan2(polygon[0][0] - center[0]);
    let angle_of = |p: Point| {
        let a = (p[1] - center[1]).atan2(p[0] - center[0]) - theta0;
        a.rem_euclid(2.0 * PI)
    };
    let mut vertices = vec![center];
    let mut angles = vec![0.0];
    let mut ring_ids = vec![vec![0]];
    for k in 1..=rings {
        let scale = k as f64 / rings as f64;
        let mut ids = Vec::new();
        for e in 0..n {
            let (a, b) = (polygon[e], polygon[(e + 1) % n]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let segs = (scale * len / h).round().max(1.0) as usize;
            for j in 0..segs {
                let t = j as f64 / segs as f64;
                let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let p = if k == rings {
                    q
                } else {
                    [
                        center[0] + scale * (q[0] - center[0]),
                        center[1] + scale * (q[1] - center[1]),
                    ]
                };
                ids.push(vertices.len());
                angles.push(if e == 0 && j == 0 { 0.0 } else { angle_of(p) });
                vertices.push(p);
            }
        }
        ring_ids.push(ids);
    }
    let triangles = stitch_rings(&vertices, &ring_ids, &angles);
    let triangles = delaunay_flips(&vertices, triangles);
    TriMesh::new(vertices, triangles, MeshDomain::Polygon)
}

fn push_oriented(vertices: &[Point], out: &mut Vec<[usize; 3]>, t: [usize; 3]) {
    if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 0.0 {
        out.push(t);
    } else {
        out.push([t[0], t[2], t[1]]);
    }
}

/// Triangulates the annuli between consecutive rings. Each ring lists its
/// vertices by increasing angle in `[0, 2π)`; ring 0 is the single center.
fn stitch_rings(vertices: &[Point], rings: &[Vec<usize>], angles: &[f64]) -> Vec<[usize; 3]> {
    let mut triangles = Vec::new();
    let center = rings[0][0];
    let first = &rings[1];
    for j in 0..first.len() {
        push_oriented(vertices, &mut triangles, [center, first[j], first[(j + 1) % first.len()]]);
    }
    for pair in rings[1..].windows(2) {
        let (inner, outer) = (&pair[0], &pair[1]);
        let (na, nb) = (inner.len(), outer.len());
        let next_angle = |ring: &[usize], i: usize| -> f64 {
            if i + 1 == ring.len() {
                angles[ring[0]] + 2.0 * PI
            } else {
                angles[ring[i + 1]]
            }
        };
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let advance_outer = if i == na {
                true
            } else if j == nb {
                false
            } else {
                next_angle(outer, j) <= next_angle(inner, i)
            };
            if advance_outer {
                push_oriented(vertices, &mut triangles, [inner[i % na], outer[j], outer[(j + 1) % nb]]);
                j += 1;
            } else {
                push_oriented(vertices, &mut triangles, [inner[i], outer[j % nb], inner[(i + 1) % na]]);
                i += 1;
            }
        }
    }
    triangles
}

fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Lawson flips until every interior edge is locally Delaunay.
fn delaunay_flips(vertices: &[Point], mut triangles: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    for _pass in 0..100 {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                owner.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        let mut touched = vec![false; triangles.len()];
        let mut flipped = false;
        let mut edges: Vec<(usize, usize)> = owner.keys().copied().filter(|&(a, b)| a < b).collect();
        edges.sort_unstable();
        for (a, b) in edges {
            let (Some(&t1), Some(&t2)) = (owner.get(&(a, b)), owner.get(&(b, a))) else {
                continue;
            };
            if touched[t1] || touched[t2] {
                continue;
            }
            let c = triangles[t1].iter().copied().find(|&v| v != a && v != b).unwrap();
            let d = triangles[t2].iter().copied().find(|&v| v != a && v != b).unwrap();
            let [pa, pb, pc, pd] = [a, b, c, d].map(|v| vertices[v]);
            // (a, b, c) is counter-clockwise in t1.
            if in_circle(pa, pb, pc, pd) <= 1e-14 {
                continue;
            }
            let n1 = [c, a, d];
            let n2 = [d, b, c];
            if signed_area(pc, pa, pd) <= 0.0 || signed_area(pd, pb, pc) <= 0.0 {
                continue;
            }
            triangles[t1] = n1;
            triangles[t2] = n2;
            touched[t1] = true;
            touched[t2] = true;
            flipped = true;
        }
        if !flipped {
            break;
        }
    }
    triangles
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. On disc meshes, midpoints of boundary edges are projected
/// onto the unit circle.
pub fn refine_uniform(mesh: &TriMesh) -> Result<TriMesh> {
    let mut vertices = mesh.vertices().to_vec();
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            *edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut keys: Vec<_> = edge_count.keys().copied().collect();
    keys.sort_unstable();
    let mut midpoint = HashMap::with_capacity(keys.len());
    for (a, b) in keys {
        let (pa, pb) = (vertices[a], vertices[b]);
        let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if mesh.domain() == MeshDomain::UnitDisc && edge_count[&(a, b)] == 1 {
            let r = m[0].hypot(m[1]);
            m = [m[0] / r, m[1] / r];
        }
        midpoint.insert((a, b), vertices.len());
        vertices.push(m);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for &[a, b, c] in mesh.triangles() {
        let ab = midpoint[&edge_key(a, b)];
        let bc = midpoint[&edge_key(b, c)];
        let ca = midpoint[&edge_key(c, a)];
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    TriMesh::new(vertices, triangles, mesh.domain())
}
