//! Manufactured solutions on the unit disc, error norms, and convergence
//! studies.

mod selfcheck;
mod study;

pub use selfcheck::{run_selfcheck, CheckOutcome};
pub use study::{
    ball_csv, eoc, gnuplot_script, run_ball_study, run_convergence_study, BallRow, EocRow, EocTable, StudySetup, CSV_HEADER,
};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fracfem::StiffnessMatrix;
use crate::mesh::{Point, TriMesh};
use crate::optctl::{OptimizeResult, ProblemData, Scheme};
use crate::solver::DataRule;

/// `c_s = (2^{2s} Γ(1+s)²)⁻¹`, the value at the origin of the solution of
/// `(−Δ)^s u = 1` on the unit disc.
pub fn ball_constant(s: f64) -> f64 {
    1.0 / (4f64.powf(s) * gamma(1.0 + s).powi(2))
}

/// `c_s (1 − |x|²)^s_+`.
pub fn ball_solution(s: f64, x: Point) -> f64 {
    let t = 1.0 - x[0] * x[0] - x[1] * x[1];
    if t <= 0.0 {
        0.0
    } else {
        ball_constant(s) * t.powf(s)
    }
}

/// Example with exact optimal state and adjoint `ū = p̄ = c_s (1 − |x|²)^s_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub example: u32,
    pub s: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    /// `‖ū p̄‖_∞ = c_s²`, attained at the origin.
    pub peak: f64,
}

pub fn build_case(example: u32, s: f64) -> Result<ManufacturedCase> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let peak = ball_constant(s).powi(2);
    let (a, b) = match example {
        1 => (0.0, 0.5),
        2 => (0.001 * peak, 1.5),
        3 => (0.95 * peak, 1.5),
        _ => return Err(Error::UnknownExample(example.to_string())),
    };
    Ok(ManufacturedCase {
        example,
        s,
        lambda: 1.0,
        a,
        b,
        peak,
    })
}

impl ManufacturedCase {
    pub fn exact_u(&self, x: Point) -> f64 {
        ball_solution(self.s, x)
    }

    pub fn exact_p(&self, x: Point) -> f64 {
        self.exact_u(x)
    }

    /// `Π_{[a,b]}(λ⁻¹ ū p̄)`.
    pub fn exact_q(&self, x: Point) -> f64 {
        (self.exact_u(x) * self.exact_p(x) / self.lambda).max(self.a).min(self.b)
    }

    /// `f = 1 + q̄ ū`, so that `(−Δ)^s ū + q̄ ū = f`.
    pub fn f(&self, x: Point) -> f64 {
        1.0 + self.exact_q(x) * self.exact_u(x)
    }

    /// `u_Ω = ū − 1 − q̄ p̄`, so that `(−Δ)^s p̄ + q̄ p̄ = ū − u_Ω`.
    pub fn u_desired(&self, x: Point) -> f64 {
        self.exact_u(x) - 1.0 - self.exact_q(x) * self.exact_p(x)
    }

    pub fn problem<'a>(&self, mesh: &'a TriMesh, k: &'a StiffnessMatrix) -> Result<ProblemData<'a>> {
        ProblemData::new(mesh, k, self.lambda, self.a, self.b, |x| self.f(x), |x| self.u_desired(x))
    }
}

/// Errors of one discrete solution; `*_s` are energy-norm surrogates
/// `‖I_h ū − ū_h‖_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub e_u_s: f64,
    pub e_u_l2: f64,
    pub e_p_s: f64,
    pub e_p_l2: f64,
    pub e_q_l2: f64,
}

impl ErrorRecord {
    pub fn as_array(&self) -> [f64; 5] {
        [self.e_u_s, self.e_u_l2, self.e_p_s, self.e_p_l2, self.e_q_l2]
    }
}

/// Discrete control at the points of `rule`: the element value for
/// piecewise constants, the projection formula `Π(λ⁻¹ u_h p_h)` otherwise.
pub fn control_at_points(mesh: &TriMesh, rule: &DataRule, result: &OptimizeResult, lambda: f64) -> Vec<Vec<f64>> {
    let q = &result.q_opt;
    (0..mesh.n_triangles())
        .map(|t| match result.scheme {
            Scheme::FullyDiscrete => vec![q.values()[t]; rule.bary[t].len()],
            Scheme::Semidiscrete => rule.bary[t]
                .iter()
                .map(|l| {
                    let up = mesh.eval_p1(&result.u_opt.values, t, l) * mesh.eval_p1(&result.p_opt.values, t, l);
                    (up / lambda).max(q.a).min(q.b)
                })
                .collect(),
        })
        .collect()
}

/// `∫_Ω (x − y)²` for two functions sampled on `rule`.
pub fn sampled_distance(rule: &DataRule, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for t in 0..rule.weights.len() {
        for ((w, a), b) in rule.weights[t].iter().zip(&x[t]).zip(&y[t]) {
            total += w * (a - b) * (a - b);
        }
    }
    total.sqrt()
}

pub fn error_norms(result: &OptimizeResult, case: &ManufacturedCase, mesh: &TriMesh, k: &StiffnessMatrix) -> Result<ErrorRecord> {
    if !result.converged {
        return Err(Error::NotConverged {
            residual: result.final_residual(),
            iterations: result.iterations,
        });
    }
    let rule = DataRule::new(mesh);
    let u_exact = rule.sample(|x| case.exact_u(x));
    let interp = mesh.interpolate(|x| case.exact_u(x));
    let energy = |v: &[f64]| -> Result<f64> {
        let d: Vec<f64> = interp.iter().zip(v).map(|(a, b)| a - b).collect();
        k.energy_norm(&d)
    };
    let q_exact = rule.sample(|x| case.exact_q(x));
    let q_h = control_at_points(mesh, &rule, result, case.lambda);
    Ok(ErrorRecord {
        e_u_s: energy(&result.u_opt.values)?,
        e_u_l2: rule.l2_distance_sq(mesh, &result.u_opt.values, &u_exact).sqrt(),
        e_p_s: energy(&result.p_opt.values)?,
        e_p_l2: rule.l2_distance_sq(mesh, &result.p_opt.values, &u_exact).sqrt(),
        e_q_l2: sampled_distance(&rule, &q_exact, &q_h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_at_half_order() {
        let c = build_case(1, 0.5).unwrap();
        assert_eq!((c.a, c.b), (0.0, 0.5));
        // Γ(3/2)² = π/4, so 𝔠 = (2 Γ(3/2)²)^{-2} = 4/π².
        let expected = 4.0 / std::f64::consts::PI.powi(2);
        assert!((c.peak - expected).abs() < 1e-14);
        assert!((c.exact_q([0.0, 0.0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn example_three_clamps_only_from_below() {
        for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let c = build_case(3, s).unwrap();
            assert!(c.peak < 1.0);
            for r in [0.0f64, 0.2, 0.5, 0.9, 0.99] {
                let x = [r, 0.0];
                let expected = (c.peak * (1.0f64 - r * r).powf(2.0 * s)).max(0.95 * c.peak);
                assert!((c.exact_q(x) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn optimality_system_is_consistent() {
        for ex in 1..=3 {
            let c = build_case(ex, 0.4).unwrap();
            for x in [[0.1, 0.2], [-0.5, 0.3], [0.0, -0.9]] {
                assert_eq!(c.exact_u(x), c.exact_p(x));
                assert!((c.f(x) - c.exact_q(x) * c.exact_u(x) - 1.0).abs() < 1e-15);
                assert!((c.u_desired(x) - (c.exact_u(x) - 1.0 - c.exact_q(x) * c.exact_p(x))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(build_case(4, 0.5), Err(Error::UnknownExample(_))));
        assert!(matches!(build_case(1, 1.0), Err(Error::InvalidOrder(_))));
    }
}
