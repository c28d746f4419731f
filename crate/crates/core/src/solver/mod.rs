//! State, adjoint and linearized solves for `(K + M(q)) x = rhs`.

mod field;
mod linalg;

pub use field::{read_field, write_field, AdjointField, NodalField, StateField};
pub use linalg::{conjugate_gradient, spd_solve, CholeskyFactor, RESIDUAL_TOL};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fracfem::{assemble_mass, assemble_weighted_mass, weighted_apply, ElementField, MassMatrix, StiffnessMatrix};
use crate::mesh::{triangle_quadrature, Point, TriMesh};

/// Quadrature used for every integral involving the problem data: degree 4
/// inside, degree 7 on elements touching the boundary, where the
/// manufactured data behave like `dist(x, ∂Ω)^s`.
#[derive(Debug, Clone)]
pub struct DataRule {
    /// Per element: physical points and weights (scaled by the area).
    pub points: Vec<Vec<Point>>,
    pub weights: Vec<Vec<f64>>,
    pub bary: Vec<Vec<[f64; 3]>>,
}

impl DataRule {
    pub fn new(mesh: &TriMesh) -> Self {
        let inner = triangle_quadrature(4).expect("supported degree");
        let edge = triangle_quadrature(7).expect("supported degree");
        let mut points = Vec::with_capacity(mesh.n_triangles());
        let mut weights = Vec::with_capacity(mesh.n_triangles());
        let mut bary = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let rule = if mesh.touches_boundary(t) { &edge } else { &inner };
            let area = mesh.area(t);
            points.push(rule.points.iter().map(|b| mesh.map_point(t, b)).collect());
            weights.push(rule.weights.iter().map(|w| w * area).collect());
            bary.push(rule.points.clone());
        }
        DataRule { points, weights, bary }
    }

    /// Values of `g` at every point, element by element.
    pub fn sample(&self, g: impl Fn(Point) -> f64) -> Vec<Vec<f64>> {
        self.points.iter().map(|pts| pts.iter().map(|&p| g(p)).collect()).collect()
    }

    /// `F_i = ∫_Ω g φ_i` from sampled values.
    pub fn load_vector(&self, mesh: &TriMesh, values: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; mesh.n_interior()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for ((l, w), g) in self.bary[t].iter().zip(&self.weights[t]).zip(&values[t]) {
                for a in 0..3 {
                    if let Some(i) = mesh.dof(tri[a]) {
                        out[i] += w * g * l[a];
                    }
                }
            }
        }
        out
    }

    /// `∫_Ω (u_h − g)²` for a P1 function `u_h` and sampled `g`.
    pub fn l2_distance_sq(&self, mesh: &TriMesh, u: &[f64], values: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for t in 0..mesh.n_triangles() {
            for ((l, w), g) in self.bary[t].iter().zip(&self.weights[t]).zip(&values[t]) {
                let d = mesh.eval_p1(u, t, l) - g;
                total += w * d * d;
            }
        }
        total
    }
}

/// Degree-4 / degree-7 load vector of a callable.
pub fn load_vector(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = DataRule::new(mesh);
    rule.load_vector(mesh, &rule.sample(f))
}

fn control_hash(q: &ElementField) -> u64 {
    let mut h = DefaultHasher::new();
    q.layout.hash(&mut h);
    for v in &q.values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// `K + M(q)` for the current control, with a cached Cholesky factor.
pub struct PdeSystem<'a> {
    mesh: &'a TriMesh,
    k: &'a StiffnessMatrix,
    mass: MassMatrix,
    control: ElementField,
    factor: Option<Factor>,
}

struct Factor {
    key: u64,
    op: DMatrix<f64>,
    chol: CholeskyFactor,
}

impl<'a> PdeSystem<'a> {
    pub fn new(mesh: &'a TriMesh, k: &'a StiffnessMatrix, control: ElementField) -> Result<Self> {
        if k.n() != mesh.n_interior() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_interior(),
                got: k.n(),
            });
        }
        control.check(mesh)?;
        Ok(PdeSystem {
            mesh,
            k,
            mass: assemble_mass(mesh),
            control,
            factor: None,
        })
    }

    pub fn mesh(&self) -> &'a TriMesh {
        self.mesh
    }

    pub fn stiffness(&self) -> &'a StiffnessMatrix {
        self.k
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    pub fn control(&self) -> &ElementField {
        &self.control
    }

    /// Replaces the control; the factorization is recomputed lazily if the
    /// values actually changed.
    pub fn set_control(&mut self, q: ElementField) -> Result<()> {
        q.check(self.mesh)?;
        self.control = q;
        Ok(())
    }

    /// Dense `K + M(q)`.
    pub fn operator(&self) -> Result<DMatrix<f64>> {
        let mut a = self.k.matrix().clone();
        assemble_weighted_mass(self.mesh, &self.control)?
            .matrix
            .add_to_dense(&mut a, 1.0);
        Ok(a)
    }

    fn factor(&mut self) -> Result<&Factor> {
        let key = control_hash(&self.control);
        if self.factor.as_ref().map(|f| f.key) != Some(key) {
            let op = self.operator()?;
            let chol = CholeskyFactor::new(&op)?;
            self.factor = Some(Factor { key, op, chol });
        }
        Ok(self.factor.as_ref().expect("just set"))
    }

    /// Solves `(K + M(q)) x = rhs` with the cached factor and checks the residual.
    pub fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.mesh.n_interior();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let bnorm = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let b = DVector::from_column_slice(rhs);
        let f = self.factor()?;
        let x = DVector::from_vec(f.chol.solve(rhs));
        let res = (&f.op * &x - &b).norm() / bnorm;
        if !(res <= RESIDUAL_TOL) {
            return Err(Error::SolveFailed(res));
        }
        Ok(x.iter().copied().collect())
    }

    /// `(K + M(q)) u = F`.
    pub fn solve_state(&mut self, load: &[f64]) -> Result<StateField> {
        Ok(NodalField::new(self.solve(load)?))
    }

    /// `(K + M(q)) p = M u − U` with `U_i = ∫ u_Ω φ_i`.
    pub fn solve_adjoint(&mut self, u: &StateField, desired_load: &[f64]) -> Result<AdjointField> {
        let mut rhs = self.mass.matrix.apply(&u.values);
        for (r, d) in rhs.iter_mut().zip(desired_load) {
            *r -= d;
        }
        Ok(NodalField::new(self.solve(&rhs)?))
    }

    /// `(K + M(q)) z = −B(w, u)`.
    pub fn solve_linearized_state(&mut self, u: &StateField, w: &ElementField) -> Result<StateField> {
        let rhs: Vec<f64> = weighted_apply(self.mesh, w, &u.values)?.iter().map(|x| -x).collect();
        Ok(NodalField::new(self.solve(&rhs)?))
    }

    /// `(K + M(q)) dp = M dz − B(w, p)`.
    pub fn solve_linearized_adjoint(&mut self, dz: &StateField, p: &AdjointField, w: &ElementField) -> Result<AdjointField> {
        let mut rhs = self.mass.matrix.apply(&dz.values);
        for (r, b) in rhs.iter_mut().zip(weighted_apply(self.mesh, w, &p.values)?) {
            *r -= b;
        }
        Ok(NodalField::new(self.solve(&rhs)?))
    }
}
