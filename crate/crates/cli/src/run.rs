//! Executes a [`RunConfig`] and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fraclap::fracfem::{ElementField, FieldLayout};
use fraclap::mesh::{write_mesh, TriMesh};
use fraclap::optctl::{optimize, p0_project, sample_nodes, ControlField, OptimizeResult};
use fraclap::solver::{write_field, DataRule, PdeSystem};
use fraclap::verify::{ball_constant, build_case, error_norms, gnuplot_script, run_convergence_study, run_selfcheck, StudySetup};
use thiserror::Error;

use crate::config::{Mode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerical(#[from] fraclap::Error),
}

/// Summary lines, and whether every run converged and every check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub lines: Vec<String>,
    pub success: bool,
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `out/<mode>/<example>/<s>/`.
pub fn run_dir(cfg: &RunConfig, s: f64) -> PathBuf {
    cfg.out.join(cfg.mode.name()).join(cfg.example.to_string()).join(format!("{s}"))
}

/// `t value` lines for piecewise constants, `t k value` for node values.
pub fn write_control(q: &ControlField) -> String {
    let mut out = String::new();
    let k = q.layout().values_per_element();
    for (i, v) in q.values().iter().enumerate() {
        match q.layout() {
            FieldLayout::PiecewiseConstant => writeln!(out, "{i} {v:.16e}"),
            FieldLayout::QuadratureNodes => writeln!(out, "{} {} {v:.16e}", i / k, i % k),
        }
        .expect("writing to a String");
    }
    out
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    match cfg.mode {
        Mode::SolveState => solve_state(cfg),
        Mode::Optimize => optimize_mode(cfg),
        Mode::Study => study(cfg),
        Mode::Selfcheck => selfcheck(cfg),
    }
}

fn finest(cfg: &RunConfig) -> Result<StudySetup, RunError> {
    Ok(StudySetup::new(cfg.levels, cfg.assembly)?)
}

fn solve_state(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let setup = finest(cfg)?;
    let level = cfg.levels - 1;
    let mesh = setup.mesh(level);
    let mut lines = Vec::new();
    for &s in &cfg.s {
        let case = build_case(cfg.example, s)?;
        let k = setup.stiffness(level, s)?;
        let q = match cfg.scheme.layout() {
            FieldLayout::PiecewiseConstant => p0_project(mesh, |x| case.exact_q(x)),
            FieldLayout::QuadratureNodes => sample_nodes(mesh, |x| case.exact_q(x)),
        };
        let mut sys = PdeSystem::new(
            mesh,
            &k,
            ElementField {
                layout: cfg.scheme.layout(),
                values: q,
            },
        )?;
        let rule = DataRule::new(mesh);
        let u = sys.solve_state(&rule.load_vector(mesh, &rule.sample(|x| case.f(x))))?;
        let e_l2 = rule.l2_distance_sq(mesh, &u.values, &rule.sample(|x| case.exact_u(x))).sqrt();
        let dir = run_dir(cfg, s);
        let mut report = String::new();
        let _ = writeln!(report, "mode solve_state");
        let _ = writeln!(report, "example {}", cfg.example);
        let _ = writeln!(report, "s {s}");
        let _ = writeln!(report, "control exact_{}", cfg.scheme);
        let _ = writeln!(report, "h {:.6e}", mesh.h_max());
        let _ = writeln!(report, "interior_dofs {}", mesh.n_interior());
        let _ = writeln!(report, "e_u_L2 {e_l2:.6e}");
        let _ = writeln!(report, "u_max {:.6e}", u.values.iter().cloned().fold(f64::MIN, f64::max));
        let _ = writeln!(report, "u_exact_origin {:.6e}", ball_constant(s));
        write(&dir.join("report.txt"), &report)?;
        write(&dir.join("mesh.txt"), &write_mesh(mesh))?;
        write(&dir.join("state.txt"), &write_field(mesh, &u.values))?;
        lines.push(format!("s={s}: e_u_L2 = {e_l2:.3e} -> {}", dir.display()));
    }
    Ok(RunOutcome { lines, success: true })
}

fn optimize_report(cfg: &RunConfig, s: f64, mesh: &TriMesh, r: &OptimizeResult, errors: Option<[f64; 5]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode optimize");
    let _ = writeln!(out, "example {}", cfg.example);
    let _ = writeln!(out, "s {s}");
    let _ = writeln!(out, "h {:.6e}", mesh.h_max());
    let _ = writeln!(out, "interior_dofs {}", mesh.n_interior());
    let _ = writeln!(out, "tol {:e}", cfg.optimizer.tol_residual);
    if let Some(e) = errors {
        let names = ["e_u_s", "e_u_L2", "e_p_s", "e_p_L2", "e_q_L2"];
        for (n, v) in names.iter().zip(e) {
            let _ = writeln!(out, "{n} {v:.6e}");
        }
        let _ = writeln!(out, "note energy errors are the surrogate |I_h u - u_h|_s");
    }
    out.push_str(&r.run_report(mesh));
    out
}

fn optimize_mode(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let setup = finest(cfg)?;
    let level = cfg.levels - 1;
    let mesh = setup.mesh(level);
    let mut lines = Vec::new();
    let mut success = true;
    for &s in &cfg.s {
        let case = build_case(cfg.example, s)?;
        let k = setup.stiffness(level, s)?;
        let r = optimize(&case.problem(mesh, &k)?, &cfg.optimizer_config())?;
        let errors = if r.converged {
            Some(error_norms(&r, &case, mesh, &k)?.as_array())
        } else {
            None
        };
        success &= r.converged;
        let dir = run_dir(cfg, s);
        write(&dir.join("report.txt"), &optimize_report(cfg, s, mesh, &r, errors))?;
        write(&dir.join("mesh.txt"), &write_mesh(mesh))?;
        write(&dir.join("control.txt"), &write_control(&r.q_opt))?;
        write(&dir.join("state.txt"), &write_field(mesh, &r.u_opt.values))?;
        write(&dir.join("adjoint.txt"), &write_field(mesh, &r.p_opt.values))?;
        lines.push(format!(
            "s={s}: converged {} residual {:.3e} iterations {} active {:.3} -> {}",
            r.converged,
            r.final_residual(),
            r.iterations,
            r.q_opt.active_fraction(mesh, 1e-12),
            dir.display()
        ));
    }
    Ok(RunOutcome { lines, success })
}

fn study(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let setup = finest(cfg)?;
    let tables = run_convergence_study(&setup, cfg.example, &cfg.s, cfg.scheme, &cfg.optimizer_config())?;
    let name = format!("eoc_{}.csv", cfg.scheme);
    let mut lines = Vec::new();
    let mut plots = Vec::new();
    let mut success = true;
    for t in &tables {
        let dir = run_dir(cfg, t.s);
        write(&dir.join(&name), &t.to_csv())?;
        plots.push((t.s, format!("{}/{name}", t.s)));
        success &= t.all_converged();
        let last = t.rows.last().and_then(|r| r.eoc);
        lines.push(format!(
            "s={}: {} rows, final control EOC {} -> {}",
            t.s,
            t.rows.len(),
            last.map_or("n/a".into(), |e| format!("{:.3}", e[4])),
            dir.display()
        ));
    }
    let base = cfg.out.join(cfg.mode.name()).join(cfg.example.to_string());
    write(&base.join(format!("eoc_{}.gp", cfg.scheme)), &gnuplot_script(&plots, &format!("eoc_{}.png", cfg.scheme)))?;
    Ok(RunOutcome { lines, success })
}

fn selfcheck(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let outcomes = run_selfcheck(&cfg.assembly, cfg.seed);
    let lines: Vec<String> = outcomes
        .iter()
        .map(|c| format!("{} {} ({:.2}s) {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail))
        .collect();
    let passed = outcomes.iter().filter(|c| c.passed).count();
    let mut summary = lines.join("\n");
    let _ = write!(summary, "\n{passed}/{} checks passed\n", outcomes.len());
    write(&cfg.out.join("selfcheck").join("summary.txt"), &summary)?;
    let mut lines = lines;
    lines.push(format!("{passed}/{} checks passed", outcomes.len()));
    Ok(RunOutcome {
        lines,
        success: passed == outcomes.len(),
    })
}
