//! Admissible controls, the reduced cost functional and its derivatives, and
//! the two optimization schemes.

mod krylov;
mod newton;

pub use krylov::gmres;
pub use newton::{optimize, optimize_fully_discrete, optimize_semidiscrete, OptimizeResult, OptimizerConfig, Scheme, Step};

use crate::error::{Error, Result};
use crate::fracfem::{nodal_rule, weighted_apply, ElementField, FieldLayout, StiffnessMatrix};
use crate::mesh::{triangle_quadrature, Point, TriMesh};
use crate::solver::{AdjointField, DataRule, PdeSystem, StateField};

/// `Π_{[a,b]}(v) = min{b, max{v, a}}`.
pub fn project_box(v: f64, a: f64, b: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidBounds { a, b });
    }
    Ok(v.max(a).min(b))
}

/// A control with its box `[a, b]`, `0 ≤ a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub field: ElementField,
    pub a: f64,
    pub b: f64,
}

impl ControlField {
    pub fn new(field: ElementField, a: f64, b: f64) -> Result<Self> {
        check_bounds(a, b)?;
        Ok(ControlField { field, a, b })
    }

    pub fn constant(mesh: &TriMesh, layout: FieldLayout, value: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(ElementField::constant(mesh, layout, value), a, b)
    }

    pub fn layout(&self) -> FieldLayout {
        self.field.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    /// Copy with every value clamped to `[a, b]`.
    pub fn projected(&self) -> ControlField {
        let mut out = self.clone();
        out.field.values.iter_mut().for_each(|v| *v = v.max(self.a).min(self.b));
        out
    }

    pub fn is_admissible(&self) -> bool {
        self.field.values.iter().all(|&v| v >= self.a && v <= self.b)
    }

    pub fn with_values(&self, values: Vec<f64>) -> ControlField {
        ControlField {
            field: ElementField {
                layout: self.field.layout,
                values,
            },
            a: self.a,
            b: self.b,
        }
    }

    /// Area fraction where a bound is attained (within `tol`).
    pub fn active_fraction(&self, mesh: &TriMesh, tol: f64) -> f64 {
        let active = ElementField {
            layout: self.field.layout,
            values: self
                .field
                .values
                .iter()
                .map(|&v| if v <= self.a + tol || v >= self.b - tol { 1.0 } else { 0.0 })
                .collect(),
        };
        let ones = ElementField::constant(mesh, self.field.layout, 1.0);
        active.weighted_inner(mesh, &ones) / ones.l2_norm_sq(mesh)
    }
}

fn check_bounds(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::InvalidBounds { a, b });
    }
    Ok(())
}

/// Element averages `(1/|T|) ∫_T g` with the degree-4 rule.
pub fn p0_project(mesh: &TriMesh, g: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = triangle_quadrature(4).expect("supported degree");
    (0..mesh.n_triangles())
        .map(|t| rule.points.iter().zip(&rule.weights).map(|(b, w)| w * g(mesh.map_point(t, b))).sum())
        .collect()
}

/// `g` at the nodes of the point-wise control layout.
pub fn sample_nodes(mesh: &TriMesh, g: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = nodal_rule();
    (0..mesh.n_triangles())
        .flat_map(|t| rule.points.iter().map(|b| g(mesh.map_point(t, b))).collect::<Vec<_>>())
        .collect()
}

/// The product `u p` of two P1 functions in the given layout: exact element
/// averages, or point values at the control nodes.
pub fn product_field(mesh: &TriMesh, layout: FieldLayout, u: &[f64], p: &[f64]) -> ElementField {
    let values = match layout {
        FieldLayout::PiecewiseConstant => (0..mesh.n_triangles())
            .map(|t| {
                let ul = mesh.local_values(u, t);
                let pl = mesh.local_values(p, t);
                // (1/|T|) ∫_T λ_a λ_b = (1 + δ_ab) / 12
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s += ul[a] * pl[b] * if a == b { 2.0 } else { 1.0 };
                    }
                }
                s / 12.0
            })
            .collect(),
        FieldLayout::QuadratureNodes => {
            let rule = nodal_rule();
            (0..mesh.n_triangles())
                .flat_map(|t| {
                    rule.points
                        .iter()
                        .map(|b| mesh.eval_p1(u, t, b) * mesh.eval_p1(p, t, b))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };
    ElementField { layout, values }
}

/// Data of one control problem on a fixed mesh.
pub struct ProblemData<'a> {
    pub mesh: &'a TriMesh,
    pub k: &'a StiffnessMatrix,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub rule: DataRule,
    /// `F_i = ∫ f φ_i`.
    pub load: Vec<f64>,
    /// `U_i = ∫ u_Ω φ_i`.
    pub target_load: Vec<f64>,
    /// `u_Ω` at the points of `rule`.
    pub target_samples: Vec<Vec<f64>>,
}

impl<'a> ProblemData<'a> {
    pub fn new(
        mesh: &'a TriMesh,
        k: &'a StiffnessMatrix,
        lambda: f64,
        a: f64,
        b: f64,
        f: impl Fn(Point) -> f64,
        u_des: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        check_bounds(a, b)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if k.n() != mesh.n_interior() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_interior(),
                got: k.n(),
            });
        }
        let rule = DataRule::new(mesh);
        let load = rule.load_vector(mesh, &rule.sample(f));
        let target_samples = rule.sample(u_des);
        let target_load = rule.load_vector(mesh, &target_samples);
        Ok(ProblemData {
            mesh,
            k,
            lambda,
            a,
            b,
            rule,
            load,
            target_load,
            target_samples,
        })
    }

    pub fn system(&self, q: &ControlField) -> Result<PdeSystem<'a>> {
        PdeSystem::new(self.mesh, self.k, q.field.clone())
    }

    pub fn initial_control(&self, layout: FieldLayout) -> ControlField {
        ControlField::constant(self.mesh, layout, 0.5 * (self.a + self.b), self.a, self.b).expect("bounds checked")
    }
}

/// `j = ½‖u_h − u_Ω‖² + (λ/2)‖q‖²`, split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedObjectiveReport {
    pub j_value: f64,
    pub tracking_term: f64,
    pub regularization_term: f64,
    pub lambda: f64,
}

/// State, adjoint and cost at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub u: StateField,
    pub p: AdjointField,
    pub report: ReducedObjectiveReport,
}

fn objective_terms(data: &ProblemData, q: &ControlField, u: &StateField) -> ReducedObjectiveReport {
    let tracking_term = 0.5 * data.rule.l2_distance_sq(data.mesh, &u.values, &data.target_samples);
    let regularization_term = 0.5 * data.lambda * q.field.l2_norm_sq(data.mesh);
    ReducedObjectiveReport {
        j_value: tracking_term + regularization_term,
        tracking_term,
        regularization_term,
        lambda: data.lambda,
    }
}

/// Solves state and adjoint for `q` on `sys` and evaluates the cost.
pub fn evaluate(sys: &mut PdeSystem, data: &ProblemData, q: &ControlField) -> Result<Evaluation> {
    sys.set_control(q.field.clone())?;
    let u = sys.solve_state(&data.load)?;
    let p = sys.solve_adjoint(&u, &data.target_load)?;
    let report = objective_terms(data, q, &u);
    Ok(Evaluation { u, p, report })
}

/// Cost only; the adjoint is not needed.
pub fn reduced_objective(q: &ControlField, data: &ProblemData) -> Result<ReducedObjectiveReport> {
    let mut sys = data.system(q)?;
    let u = sys.solve_state(&data.load)?;
    Ok(objective_terms(data, q, &u))
}

/// Derivative density `λ q − u_h p_h` in the layout of `q`: element
/// averages for piecewise-constant controls, point values otherwise. Its
/// `L²` pairing with `w` is `j'(q) w`.
pub fn reduced_gradient(mesh: &TriMesh, q: &ControlField, u: &StateField, p: &AdjointField, lambda: f64) -> ElementField {
    let up = product_field(mesh, q.layout(), &u.values, &p.values);
    ElementField {
        layout: q.layout(),
        values: q.values().iter().zip(&up.values).map(|(qv, g)| lambda * qv - g).collect(),
    }
}

/// `j''(q) w² = λ‖w‖² − 2 (w z, p) + ‖z‖²` with `z` the linearized state.
pub fn curvature_form(q: &ControlField, w: &ElementField, data: &ProblemData) -> Result<f64> {
    let mut sys = data.system(q)?;
    let eval = evaluate(&mut sys, data, q)?;
    curvature_at(&mut sys, data, &eval, w)
}

/// As [`curvature_form`], reusing an evaluation at `q` on the same system.
pub fn curvature_at(sys: &mut PdeSystem, data: &ProblemData, eval: &Evaluation, w: &ElementField) -> Result<f64> {
    let z = sys.solve_linearized_state(&eval.u, w)?;
    let wz = weighted_apply(data.mesh, w, &z.values)?;
    let wzp: f64 = wz.iter().zip(&eval.p.values).map(|(a, b)| a * b).sum();
    let zz = sys.mass().matrix.inner(&z.values, &z.values);
    Ok(data.lambda * w.l2_norm_sq(data.mesh) - 2.0 * wzp + zz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disc_mesh, MeshDomain};

    #[test]
    fn clamp_examples() {
        assert_eq!(project_box(0.7, 0.0, 0.5).unwrap(), 0.5);
        assert_eq!(project_box(0.3, 0.0, 0.5).unwrap(), 0.3);
        assert_eq!(project_box(-1.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(project_box(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bounds_are_validated() {
        let m = make_disc_mesh(8).unwrap();
        assert!(ControlField::constant(&m, FieldLayout::PiecewiseConstant, 0.0, 0.0, 0.5).is_ok());
        assert!(ControlField::constant(&m, FieldLayout::PiecewiseConstant, 0.0, -0.1, 0.5).is_err());
        assert!(ControlField::constant(&m, FieldLayout::PiecewiseConstant, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn linear_function_averages_to_its_centroid_value() {
        let m = TriMesh::new(vec![[0.0, 0.0], [2.0, 0.1], [0.3, 1.0]], vec![[0, 1, 2]], MeshDomain::Polygon).unwrap();
        let g = |p: Point| 1.5 - 2.0 * p[0] + 0.7 * p[1];
        let c = m.centroid(0);
        assert!((p0_project(&m, g)[0] - g(c)).abs() < 1e-14);
        assert!(p0_project(&m, |_| 3.25).iter().all(|&v| (v - 3.25).abs() < 1e-14));
    }

    #[test]
    fn product_averages_are_exact() {
        let m = make_disc_mesh(12).unwrap();
        let u = m.interpolate(|p| 1.0 - p[0] * p[0] - p[1] * p[1]);
        let p = m.interpolate(|p| 0.5 + p[0]);
        let avg = product_field(&m, FieldLayout::PiecewiseConstant, &u, &p);
        let rule = triangle_quadrature(2).unwrap();
        for t in 0..m.n_triangles() {
            let direct: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(b, w)| w * m.eval_p1(&u, t, b) * m.eval_p1(&p, t, b))
                .sum();
            assert!((avg.values[t] - direct).abs() < 1e-15);
        }
    }
}
