//! Quick consistency suite run by `mode=selfcheck`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ball_constant, build_case};
use crate::fracfem::{
    assemble_stiffness, complement_weight, normalization_constant, AssemblyConfig, DomainDescriptor, ElementField,
    FieldLayout, FracParams,
};
use crate::mesh::{make_disc_mesh, refine_uniform};
use crate::optctl::{
    curvature_form, optimize, reduced_gradient, reduced_objective, ControlField, OptimizerConfig, ProblemData, Scheme,
};
use crate::solver::{load_vector, PdeSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn check(name: &'static str, f: impl FnOnce() -> crate::Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every check; `seed` drives the random directions.
pub fn run_selfcheck(assembly: &AssemblyConfig, seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    out.push(check("normalization_constant", || {
        let c = normalization_constant(0.5, 2)?;
        let err = (c - 0.5 / std::f64::consts::PI).abs();
        Ok((err < 1e-15, format!("|C(2,1/2) - 1/(2pi)| = {err:.2e}")))
    }));
    out.push(check("complement_weight_centre", || {
        let mut worst = 0.0f64;
        for k in 1..10 {
            let s = 0.1 * k as f64;
            let w = complement_weight(&DomainDescriptor::UnitDisc, [0.0, 0.0], s, assembly.n_angles)?;
            worst = worst.max((w - std::f64::consts::PI / s).abs());
        }
        Ok((worst < 1e-8, format!("max |omega(0) - pi/s| = {worst:.2e}")))
    }));
    out.push(check("stiffness_symmetric_spd", || {
        let mesh = make_disc_mesh(12)?;
        let mut ok = true;
        for s in [0.25, 0.5, 0.75] {
            let k = assemble_stiffness(&mesh, &FracParams::new(s)?, assembly)?;
            ok &= k.matrix() == &k.matrix().transpose();
            ok &= k.matrix().clone().cholesky().is_some();
        }
        Ok((ok, "s in {0.25, 0.5, 0.75} on a 24-triangle disc".into()))
    }));

    let mesh = refine_uniform(&make_disc_mesh(12).expect("valid size")).expect("valid mesh");
    let k = assemble_stiffness(&mesh, &FracParams::new(0.5).expect("valid order"), assembly);
    let Ok(k) = k else {
        out.push(check("assembly", || k.map(|_| (true, String::new()))));
        return out;
    };
    out.push(check("ball_origin_value", || {
        let mut sys = PdeSystem::new(&mesh, &k, ElementField::constant(&mesh, FieldLayout::PiecewiseConstant, 0.0))?;
        let u = sys.solve_state(&load_vector(&mesh, |_| 1.0))?;
        let c = ball_constant(0.5);
        let u0 = u.values.iter().cloned().fold(f64::MIN, f64::max);
        let rel = (u0 - c).abs() / c;
        Ok((rel < 0.1, format!("max u_h = {u0:.6}, c_s = {c:.6}, rel {rel:.2e}")))
    }));

    let case = build_case(1, 0.5).expect("valid case");
    let data = case.problem(&mesh, &k);
    let Ok(data) = data else {
        out.push(check("problem_data", || data.map(|_| (true, String::new()))));
        return out;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = ControlField::new(
        ElementField {
            layout: FieldLayout::PiecewiseConstant,
            values: (0..mesh.n_triangles()).map(|_| rng.random_range(0.1..0.4)).collect(),
        },
        case.a,
        case.b,
    )
    .expect("valid bounds");
    let w = ElementField {
        layout: FieldLayout::PiecewiseConstant,
        values: (0..mesh.n_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let shifted = |eps: f64| q.with_values(q.values().iter().zip(&w.values).map(|(a, b)| a + eps * b).collect());
    out.push(check("gradient_central_difference", || {
        let mut sys = data.system(&q)?;
        let eval = crate::optctl::evaluate(&mut sys, &data, &q)?;
        let g = reduced_gradient(&mesh, &q, &eval.u, &eval.p, data.lambda);
        let dj = g.weighted_inner(&mesh, &w);
        let eps = 1e-5;
        let fd = (reduced_objective(&shifted(eps), &data)?.j_value - reduced_objective(&shifted(-eps), &data)?.j_value)
            / (2.0 * eps);
        let rel = ((dj - fd) / fd).abs();
        Ok((rel < 1e-4, format!("rel {rel:.2e}")))
    }));
    out.push(check("curvature_second_difference", || {
        let c = curvature_form(&q, &w, &data)?;
        let eps = 1e-3;
        let j = |e: f64| reduced_objective(&shifted(e), &data).map(|r| r.j_value);
        let fd = (j(eps)? - 2.0 * j(0.0)? + j(-eps)?) / (eps * eps);
        let rel = ((c - fd) / fd).abs();
        Ok((rel < 1e-3, format!("rel {rel:.2e}")))
    }));
    out.push(check("trivial_problem_hits_lower_bound", || {
        let zero = ProblemData::new(&mesh, &k, 1.0, 0.2, 0.7, |_| 0.0, |_| 0.0)?;
        let r = optimize(&zero, &OptimizerConfig::default())?;
        let ok = r.converged && r.iterations <= 2 && r.q_opt.values().iter().all(|&v| (v - 0.2).abs() < 1e-14);
        Ok((ok, format!("{} iterations", r.iterations)))
    }));
    for scheme in [Scheme::FullyDiscrete, Scheme::Semidiscrete] {
        let name = match scheme {
            Scheme::FullyDiscrete => "example1_fully_discrete",
            Scheme::Semidiscrete => "example1_semidiscrete",
        };
        out.push(check(name, || {
            let cfg = OptimizerConfig {
                scheme,
                ..OptimizerConfig::default()
            };
            let r = optimize(&data, &cfg)?;
            Ok((
                r.converged && r.q_opt.is_admissible(),
                format!("residual {:.2e} after {} iterations", r.final_residual(), r.iterations),
            ))
        }));
    }
    out
}
