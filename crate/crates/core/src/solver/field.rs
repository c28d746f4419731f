//! P1 coefficient vectors on the interior DOFs and their text export.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Interior nodal values of a P1 function that vanishes on `∂Ω` and outside.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

pub type StateField = NodalField;
pub type AdjointField = NodalField;

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        NodalField { values }
    }

    pub fn zeros(n: usize) -> Self {
        NodalField { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values on every vertex, zero on the boundary.
    pub fn to_vertices(&self, mesh: &TriMesh) -> Vec<f64> {
        mesh.dof_map().iter().map(|d| d.map_or(0.0, |i| self.values[i])).collect()
    }
}

/// One `vertex_index value` line per vertex; boundary vertices get 0.
pub fn write_field(mesh: &TriMesh, values: &[f64]) -> String {
    let mut out = String::new();
    for (v, d) in mesh.dof_map().iter().enumerate() {
        let x = d.map_or(0.0, |i| values[i]);
        writeln!(out, "{v} {x:.16e}").expect("writing to a String");
    }
    out
}

/// Parses the output of [`write_field`] into per-vertex values. Every vertex
/// must appear exactly once.
pub fn read_field(text: &str, n_vertices: usize) -> Result<Vec<f64>> {
    let mut values = vec![f64::NAN; n_vertices];
    let mut seen = vec![false; n_vertices];
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.into(),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(err("expected `vertex_index value`"));
        };
        let v: usize = a.parse().map_err(|_| err("bad vertex index"))?;
        let x: f64 = b.parse().map_err(|_| err("bad value"))?;
        if !x.is_finite() {
            return Err(err("non-finite value"));
        }
        if v >= n_vertices {
            return Err(err("vertex index out of range"));
        }
        if seen[v] {
            return Err(err("duplicate vertex index"));
        }
        seen[v] = true;
        values[v] = x;
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("vertex {v} missing"),
        });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_disc_mesh;

    #[test]
    fn round_trip_is_exact() {
        let m = make_disc_mesh(12).unwrap();
        let u: Vec<f64> = (0..m.n_interior()).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let text = write_field(&m, &u);
        let back = read_field(&text, m.n_vertices()).unwrap();
        assert_eq!(back, NodalField::new(u).to_vertices(&m));
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_field("0 1.0\n", 2).is_err());
        assert!(read_field("0 1.0\n0 2.0\n", 2).is_err());
        assert!(read_field("0 1.0\n5 2.0\n", 2).is_err());
        assert!(read_field("0 nan\n1 2.0\n", 2).is_err());
        assert!(read_field("0 1.0 3\n1 2.0\n", 2).is_err());
        assert_eq!(read_field("1 2.5\n\n0 -1\n", 2).unwrap(), vec![-1.0, 2.5]);
    }
}
