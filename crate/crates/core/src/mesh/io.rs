//! Plain-text mesh format: a header line `NV NT`, then `NV` lines `x y bflag`,
//! then `NT` lines `i j k` with 0-based vertex indices. Coordinates are written
//! with 17 significant digits so that a write/read cycle is bit-exact.

use std::fmt::Write as _;

use super::{MeshDomain, TriMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_triangles());
    for (p, &b) in mesh.vertices().iter().zip(mesh.boundary_flags()) {
        let _ = writeln!(out, "{:.16e} {:.16e} {}", p[0], p[1], u8::from(b));
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses the text format and validates the result. The boundary flags in
/// the file must agree with those implied by the connectivity.
pub fn read_mesh(text: &str, domain: MeshDomain) -> Result<TriMesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut it = header.split_whitespace();
    let nv: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln + 1, "bad vertex count"))?;
    let nt: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln + 1, "bad triangle count"))?;
    if it.next().is_some() {
        return Err(parse_err(ln + 1, "trailing tokens in header"));
    }
    // Guard the allocations against absurd headers.
    if nv > text.len() || nt > text.len() {
        return Err(parse_err(ln + 1, "counts exceed input size"));
    }
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing vertex line"))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(parse_err(ln + 1, "expected `x y bflag`"));
        }
        let x: f64 = tok[0].parse().map_err(|_| parse_err(ln + 1, "bad x"))?;
        let y: f64 = tok[1].parse().map_err(|_| parse_err(ln + 1, "bad y"))?;
        let b = match tok[2] {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err(ln + 1, "bflag must be 0 or 1")),
        };
        vertices.push([x, y]);
        flags.push(b);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing triangle line"))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(parse_err(ln + 1, "expected `i j k`"));
        }
        let mut tri = [0usize; 3];
        for (k, s) in tok.iter().enumerate() {
            tri[k] = s.parse().map_err(|_| parse_err(ln + 1, "bad vertex index"))?;
        }
        triangles.push(tri);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln + 1, "trailing data"));
    }
    let mesh = TriMesh::new(vertices, triangles, domain)?;
    if mesh.boundary_flags() != flags.as_slice() {
        return Err(Error::InvalidMesh("boundary flags disagree with connectivity".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disc_mesh, refine_uniform};

    #[test]
    fn round_trip_is_bit_exact() {
        let m = refine_uniform(&make_disc_mesh(12).unwrap()).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text, MeshDomain::UnitDisc).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn malformed_input_is_rejected() {
        for bad in [
            "",
            "3",
            "3 1\n0 0 1\n1 0 1\n",
            "3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 5\n",
            "3 1\n0 0 1\n1 0 1\n0 1 2\n0 1 2\n",
            "3 1\n0 0 0\n1 0 1\n0 1 1\n0 1 2\n",
            "99999999999 1\n",
        ] {
            assert!(read_mesh(bad, MeshDomain::Polygon).is_err(), "accepted {bad:?}");
        }
    }
}
