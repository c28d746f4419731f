//! Semismooth Newton on `F(q) = q − Π_{[a,b]}(λ⁻¹ u(q) p(q))` with a
//! projected-gradient Armijo fallback.

use std::fmt::{self, Write};

use super::krylov::gmres;
use super::{evaluate, product_field, reduced_gradient, ControlField, Evaluation, ProblemData};
use crate::error::{Error, Result};
use crate::fracfem::{nodal_rule, ElementField, FieldLayout};
use crate::mesh::TriMesh;
use crate::solver::{AdjointField, NodalField, PdeSystem, StateField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Piecewise-constant controls.
    FullyDiscrete,
    /// Controls induced point-wise by the projection formula.
    Semidiscrete,
}

impl Scheme {
    pub fn layout(self) -> FieldLayout {
        match self {
            Scheme::FullyDiscrete => FieldLayout::PiecewiseConstant,
            Scheme::Semidiscrete => FieldLayout::QuadratureNodes,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullyDiscrete => "fully_discrete",
            Scheme::Semidiscrete => "semidiscrete",
        }
    }

    pub fn parse(text: &str) -> Option<Scheme> {
        match text {
            "fully_discrete" => Some(Scheme::FullyDiscrete),
            "semidiscrete" => Some(Scheme::Semidiscrete),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub scheme: Scheme,
    /// Stop once `‖F(q)‖_{L²} ≤ tol_residual`.
    pub tol_residual: f64,
    pub max_newton: usize,
    pub max_fallback: usize,
    /// A Newton step is kept if it reduces the residual by this factor.
    pub newton_decrease: f64,
    pub armijo_c: f64,
    pub armijo_backtrack: f64,
    pub armijo_max_backtracks: usize,
    /// Relative tolerance of the inner Krylov solve.
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            scheme: Scheme::FullyDiscrete,
            tol_residual: 1e-9,
            max_newton: 30,
            max_fallback: 200,
            newton_decrease: 0.9,
            armijo_c: 1e-4,
            armijo_backtrack: 0.5,
            armijo_max_backtracks: 40,
            krylov_tol: 1e-2,
            krylov_max_iter: 200,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.tol_residual) || !positive(self.armijo_c) || !positive(self.krylov_tol) {
            return bad("tolerances must be positive");
        }
        if self.max_newton == 0 || self.max_fallback == 0 || self.krylov_max_iter == 0 || self.armijo_max_backtracks == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.armijo_backtrack > 0.0 && self.armijo_backtrack < 1.0) {
            return bad("armijo_backtrack must lie in (0, 1)");
        }
        if !(self.newton_decrease > 0.0 && self.newton_decrease < 1.0) {
            return bad("newton_decrease must lie in (0, 1)");
        }
        Ok(())
    }
}

/// How an iterate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Initial,
    Newton,
    Fallback,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub scheme: Scheme,
    pub q_opt: ControlField,
    pub u_opt: StateField,
    pub p_opt: AdjointField,
    /// `‖F(q_k)‖_{L²}` for every accepted iterate.
    pub residual_history: Vec<f64>,
    pub j_history: Vec<f64>,
    pub steps: Vec<Step>,
    pub converged: bool,
    pub iterations: usize,
    pub newton_steps: usize,
    pub fallback_steps: usize,
    pub krylov_products: usize,
}

impl OptimizeResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("at least the initial iterate")
    }

    pub fn final_j(&self) -> f64 {
        *self.j_history.last().expect("at least the initial iterate")
    }

    /// Plain-text summary with the full iteration history.
    pub fn run_report(&self, mesh: &TriMesh) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "scheme {}", self.scheme);
        let _ = writeln!(w, "converged {}", self.converged);
        let _ = writeln!(w, "iterations {}", self.iterations);
        let _ = writeln!(w, "newton_steps {}", self.newton_steps);
        let _ = writeln!(w, "fallback_steps {}", self.fallback_steps);
        let _ = writeln!(w, "krylov_products {}", self.krylov_products);
        let _ = writeln!(w, "final_residual {:.6e}", self.final_residual());
        let _ = writeln!(w, "final_j {:.16e}", self.final_j());
        let _ = writeln!(w, "active_fraction {:.6}", self.q_opt.active_fraction(mesh, 1e-12));
        let _ = writeln!(w, "history");
        for (k, ((r, j), s)) in self.residual_history.iter().zip(&self.j_history).zip(&self.steps).enumerate() {
            let kind = match s {
                Step::Initial => "initial",
                Step::Newton => "newton",
                Step::Fallback => "fallback",
            };
            let _ = writeln!(w, "{k} {kind} {r:.6e} {j:.16e}");
        }
        out
    }
}

/// Weights of the `L²` inner product on control coefficients.
pub(crate) fn control_weights(mesh: &TriMesh, layout: FieldLayout) -> Vec<f64> {
    match layout {
        FieldLayout::PiecewiseConstant => (0..mesh.n_triangles()).map(|t| mesh.area(t)).collect(),
        FieldLayout::QuadratureNodes => {
            let rule = nodal_rule();
            (0..mesh.n_triangles())
                .flat_map(|t| rule.weights.iter().map(move |w| w * mesh.area(t)).collect::<Vec<_>>())
                .collect()
        }
    }
}

fn wnorm(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
}

struct Iterate {
    q: ControlField,
    eval: Evaluation,
    /// `λ⁻¹ u p` before clamping.
    phi: Vec<f64>,
    residual: Vec<f64>,
    norm: f64,
}

struct Context<'d, 'a> {
    data: &'d ProblemData<'a>,
    sys: PdeSystem<'a>,
    weights: Vec<f64>,
}

impl Context<'_, '_> {
    fn iterate(&mut self, q: ControlField) -> Result<Iterate> {
        let eval = evaluate(&mut self.sys, self.data, &q)?;
        let lambda = self.data.lambda;
        let phi: Vec<f64> = product_field(self.data.mesh, q.layout(), &eval.u.values, &eval.p.values)
            .values
            .iter()
            .map(|v| v / lambda)
            .collect();
        let residual: Vec<f64> = q.values().iter().zip(&phi).map(|(qv, f)| qv - f.max(q.a).min(q.b)).collect();
        let norm = wnorm(&self.weights, &residual);
        Ok(Iterate {
            q,
            eval,
            phi,
            residual,
            norm,
        })
    }

    /// Inexact semismooth Newton step; `None` if the Krylov solve failed.
    fn newton_step(&mut self, it: &Iterate, cfg: &OptimizerConfig, products: &mut usize) -> Result<Option<ControlField>> {
        let data = self.data;
        let layout = it.q.layout();
        // Generalized derivative of the clamp: 1 strictly inside, 0 otherwise.
        let inactive: Vec<bool> = it.phi.iter().map(|&f| f > it.q.a && f < it.q.b).collect();
        self.sys.set_control(it.q.field.clone())?;
        let sys = &mut self.sys;
        let (u, p) = (&it.eval.u, &it.eval.p);
        let mut jac = |v: &[f64]| -> Result<Vec<f64>> {
            let w = ElementField {
                layout,
                values: v.to_vec(),
            };
            let z = sys.solve_linearized_state(u, &w)?;
            let dp = sys.solve_linearized_adjoint(&z, p, &w)?;
            let zp = product_field(data.mesh, layout, &z.values, &p.values);
            let udp = product_field(data.mesh, layout, &u.values, &dp.values);
            Ok((0..v.len())
                .map(|i| {
                    let d = if inactive[i] { (zp.values[i] + udp.values[i]) / data.lambda } else { 0.0 };
                    v[i] - d
                })
                .collect())
        };
        let rhs: Vec<f64> = it.residual.iter().map(|x| -x).collect();
        match gmres(&mut jac, &rhs, &self.weights, cfg.krylov_tol, cfg.krylov_max_iter) {
            Ok((delta, n)) => {
                *products += n;
                let values = it.q.values().iter().zip(&delta).map(|(q, d)| q + d).collect();
                Ok(Some(it.q.with_values(values).projected()))
            }
            Err(Error::SolveFailed(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Projected gradient with Armijo backtracking from the step `1/λ`.
    fn fallback_step(&mut self, it: &Iterate, cfg: &OptimizerConfig) -> Result<Option<Iterate>> {
        let g = reduced_gradient(self.data.mesh, &it.q, &it.eval.u, &it.eval.p, self.data.lambda);
        let j0 = it.eval.report.j_value;
        let mut alpha = 1.0 / self.data.lambda;
        for _ in 0..cfg.armijo_max_backtracks {
            let values = it.q.values().iter().zip(&g.values).map(|(q, g)| q - alpha * g).collect();
            let trial = it.q.with_values(values).projected();
            let slope: f64 = self
                .weights
                .iter()
                .zip(g.values.iter().zip(trial.values().iter().zip(it.q.values())))
                .map(|(w, (g, (qn, q)))| w * g * (qn - q))
                .sum();
            if slope < 0.0 {
                let next = self.iterate(trial)?;
                let jn = next.eval.report.j_value;
                if jn < j0 && jn <= j0 + cfg.armijo_c * slope {
                    return Ok(Some(next));
                }
            } else {
                break;
            }
            alpha *= cfg.armijo_backtrack;
        }
        Ok(None)
    }
}

/// Runs the optimizer for `cfg.scheme` from `q⁰ ≡ (a + b)/2`.
pub fn optimize(data: &ProblemData, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    cfg.validate()?;
    let layout = cfg.scheme.layout();
    let q0 = data.initial_control(layout);
    let mut ctx = Context {
        data,
        sys: data.system(&q0)?,
        weights: control_weights(data.mesh, layout),
    };
    let mut it = ctx.iterate(q0)?;
    let mut residual_history = vec![it.norm];
    let mut j_history = vec![it.eval.report.j_value];
    let mut steps = vec![Step::Initial];
    let (mut newton_steps, mut fallback_steps, mut products) = (0, 0, 0);
    let mut converged = it.norm <= cfg.tol_residual;
    while !converged {
        let mut next = None;
        if newton_steps < cfg.max_newton {
            newton_steps += 1;
            if let Some(q) = ctx.newton_step(&it, cfg, &mut products)? {
                let trial = ctx.iterate(q)?;
                if trial.norm <= cfg.newton_decrease * it.norm {
                    next = Some((trial, Step::Newton));
                }
            }
        }
        if next.is_none() && fallback_steps < cfg.max_fallback {
            fallback_steps += 1;
            next = ctx.fallback_step(&it, cfg)?.map(|t| (t, Step::Fallback));
        }
        let Some((n, step)) = next else { break };
        it = n;
        residual_history.push(it.norm);
        j_history.push(it.eval.report.j_value);
        steps.push(step);
        converged = it.norm <= cfg.tol_residual;
        if newton_steps >= cfg.max_newton && fallback_steps >= cfg.max_fallback {
            break;
        }
    }
    Ok(OptimizeResult {
        scheme: cfg.scheme,
        q_opt: it.q,
        u_opt: NodalField::new(it.eval.u.values),
        p_opt: NodalField::new(it.eval.p.values),
        iterations: steps.len() - 1,
        residual_history,
        j_history,
        steps,
        converged,
        newton_steps,
        fallback_steps,
        krylov_products: products,
    })
}

pub fn optimize_fully_discrete(data: &ProblemData, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    optimize(
        data,
        &OptimizerConfig {
            scheme: Scheme::FullyDiscrete,
            ..*cfg
        },
    )
}

pub fn optimize_semidiscrete(data: &ProblemData, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    optimize(
        data,
        &OptimizerConfig {
            scheme: Scheme::Semidiscrete,
            ..*cfg
        },
    )
}
