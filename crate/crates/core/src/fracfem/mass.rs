//! P1 mass matrices, plain and weighted by an element-wise coefficient.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::{triangle_quadrature, QuadratureRule, TriMesh};

/// Degree of the rule whose nodes carry point-wise coefficient values.
pub const NODAL_RULE_DEGREE: usize = 4;

/// How a coefficient on the mesh is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldLayout {
    /// One value per triangle.
    PiecewiseConstant,
    /// Values at the nodes of the degree-4 triangle rule, element after element.
    QuadratureNodes,
}

impl FieldLayout {
    pub fn values_per_element(self) -> usize {
        match self {
            FieldLayout::PiecewiseConstant => 1,
            FieldLayout::QuadratureNodes => nodal_rule().len(),
        }
    }
}

pub fn nodal_rule() -> QuadratureRule {
    triangle_quadrature(NODAL_RULE_DEGREE).expect("supported degree")
}

/// A coefficient field over the triangles of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField {
    pub layout: FieldLayout,
    pub values: Vec<f64>,
}

impl ElementField {
    pub fn constant(mesh: &TriMesh, layout: FieldLayout, c: f64) -> Self {
        ElementField {
            layout,
            values: vec![c; mesh.n_triangles() * layout.values_per_element()],
        }
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        let expected = mesh.n_triangles() * self.layout.values_per_element();
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn element_values(&self, t: usize) -> &[f64] {
        let k = self.layout.values_per_element();
        &self.values[t * k..(t + 1) * k]
    }

    /// `∫_Ω w²` with the layout's own quadrature.
    pub fn l2_norm_sq(&self, mesh: &TriMesh) -> f64 {
        self.weighted_inner(mesh, self)
    }

    pub fn weighted_inner(&self, mesh: &TriMesh, other: &ElementField) -> f64 {
        assert_eq!(self.layout, other.layout);
        match self.layout {
            FieldLayout::PiecewiseConstant => (0..mesh.n_triangles())
                .map(|t| mesh.area(t) * self.values[t] * other.values[t])
                .sum(),
            FieldLayout::QuadratureNodes => {
                let rule = nodal_rule();
                let k = rule.len();
                (0..mesh.n_triangles())
                    .map(|t| {
                        let a = &self.values[t * k..(t + 1) * k];
                        let b = &other.values[t * k..(t + 1) * k];
                        mesh.area(t) * rule.weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum::<f64>()
                    })
                    .sum()
            }
        }
    }
}

fn p1_local_mass(area: f64) -> [[f64; 3]; 3] {
    let mut m = [[area / 12.0; 3]; 3];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = area / 6.0;
    }
    m
}

#[derive(Debug, Clone)]
pub struct MassMatrix {
    pub matrix: CsrMatrix,
}

/// `(φ_i, φ_j)` on the interior DOFs.
pub fn assemble_mass(mesh: &TriMesh) -> MassMatrix {
    let field = ElementField::constant(mesh, FieldLayout::PiecewiseConstant, 1.0);
    MassMatrix {
        matrix: weighted_csr(mesh, &field, true),
    }
}

/// `(φ_i, φ_j)` over every vertex, boundary ones included.
pub fn assemble_mass_all_vertices(mesh: &TriMesh) -> CsrMatrix {
    let field = ElementField::constant(mesh, FieldLayout::PiecewiseConstant, 1.0);
    weighted_csr(mesh, &field, false)
}

#[derive(Debug, Clone)]
pub struct WeightedMassMatrix {
    pub matrix: CsrMatrix,
}

/// `Σ_T ∫_T q φ_i φ_j` on the interior DOFs. Piecewise-constant weights are
/// integrated exactly; point-wise weights use the degree-4 rule they live on.
pub fn assemble_weighted_mass(mesh: &TriMesh, q: &ElementField) -> Result<WeightedMassMatrix> {
    q.check(mesh)?;
    Ok(WeightedMassMatrix {
        matrix: weighted_csr(mesh, q, true),
    })
}

/// Local matrix `∫_T q λ_a λ_b`.
pub fn local_weighted_mass(mesh: &TriMesh, q: &ElementField, t: usize, rule: &QuadratureRule) -> [[f64; 3]; 3] {
    let area = mesh.area(t);
    match q.layout {
        FieldLayout::PiecewiseConstant => {
            let mut m = p1_local_mass(area);
            m.iter_mut().flatten().for_each(|v| *v *= q.values[t]);
            m
        }
        FieldLayout::QuadratureNodes => {
            let vals = q.element_values(t);
            let mut m = [[0.0; 3]; 3];
            for ((p, w), qv) in rule.points.iter().zip(&rule.weights).zip(vals) {
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += area * w * qv * p[a] * p[b];
                    }
                }
            }
            m
        }
    }
}

fn weighted_csr(mesh: &TriMesh, q: &ElementField, interior_only: bool) -> CsrMatrix {
    let rule = nodal_rule();
    let index = |v: usize| if interior_only { mesh.dof(v) } else { Some(v) };
    let n = if interior_only { mesh.n_interior() } else { mesh.n_vertices() };
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let m = local_weighted_mass(mesh, q, t, &rule);
        for a in 0..3 {
            let Some(i) = index(tri[a]) else { continue };
            for b in 0..3 {
                if let Some(j) = index(tri[b]) {
                    triplets.push((i, j, m[a][b]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, &triplets).expect("indices in range")
}

/// `B(w, u)_i = ∫_Ω w u φ_i` for a P1 function `u` given on the interior DOFs.
pub fn weighted_apply(mesh: &TriMesh, w: &ElementField, u: &[f64]) -> Result<Vec<f64>> {
    w.check(mesh)?;
    if u.len() != mesh.n_interior() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_interior(),
            got: u.len(),
        });
    }
    let rule = nodal_rule();
    let mut out = vec![0.0; mesh.n_interior()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let m = local_weighted_mass(mesh, w, t, &rule);
        let ul = mesh.local_values(u, t);
        for a in 0..3 {
            if let Some(i) = mesh.dof(tri[a]) {
                out[i] += (0..3).map(|b| m[a][b] * ul[b]).sum::<f64>();
            }
        }
    }
    Ok(out)
}
