//! Convergence studies on the nested disc family and their CSV output.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{ball_constant, ball_solution, build_case, error_norms, ErrorRecord};
use crate::error::{Error, Result};
use crate::fracfem::{assemble_stiffness, AssemblyConfig, ElementField, FieldLayout, FracParams, StiffnessMatrix};
use crate::mesh::{make_disc_mesh, refine_uniform, TriMesh};
use crate::optctl::{optimize, OptimizerConfig, Scheme};
use crate::solver::{DataRule, PdeSystem};

/// Boundary vertices of the coarsest disc mesh.
pub const COARSE_BOUNDARY_VERTICES: usize = 16;

pub const CSV_HEADER: &str =
    "h,e_u_s,e_u_L2,e_p_s,e_p_L2,e_q_L2,eoc_u_s,eoc_u_L2,eoc_p_s,eoc_p_L2,eoc_q_L2,iterations,converged";

/// `log(e₀/e₁) / log(h₀/h₁)`.
pub fn eoc(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// The nested meshes of a study and their stiffness matrices, assembled
/// once per `(level, s)`.
pub struct StudySetup {
    meshes: Vec<TriMesh>,
    assembly: AssemblyConfig,
    cache: Mutex<HashMap<(usize, u64), Arc<StiffnessMatrix>>>,
}

impl StudySetup {
    /// `make_disc_mesh(16)` and `levels − 1` uniform refinements.
    pub fn new(levels: usize, assembly: AssemblyConfig) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidConfig("at least one mesh level is needed".into()));
        }
        assembly.validate()?;
        let mut meshes = vec![make_disc_mesh(COARSE_BOUNDARY_VERTICES)?];
        for _ in 1..levels {
            let next = refine_uniform(meshes.last().expect("non-empty"))?;
            meshes.push(next);
        }
        Ok(StudySetup {
            meshes,
            assembly,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn levels(&self) -> usize {
        self.meshes.len()
    }

    pub fn mesh(&self, level: usize) -> &TriMesh {
        &self.meshes[level]
    }

    pub fn assembly(&self) -> &AssemblyConfig {
        &self.assembly
    }

    /// Drops every cached matrix.
    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    pub fn stiffness(&self, level: usize, s: f64) -> Result<Arc<StiffnessMatrix>> {
        let key = (level, s.to_bits());
        if let Some(k) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(assemble_stiffness(&self.meshes[level], &FracParams::new(s)?, &self.assembly)?);
        Ok(Arc::clone(self.cache.lock().expect("cache lock").entry(key).or_insert(k)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub level: usize,
    pub h: f64,
    /// `None` if the optimizer did not converge on this level.
    pub errors: Option<ErrorRecord>,
    pub eoc: Option<[f64; 5]>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub example: u32,
    pub s: f64,
    pub scheme: Scheme,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    fn fill_eocs(&mut self) {
        for k in 1..self.rows.len() {
            let (prev, cur) = (&self.rows[k - 1], &self.rows[k]);
            self.rows[k].eoc = match (prev.errors, cur.errors) {
                (Some(a), Some(b)) => {
                    let (ea, eb) = (a.as_array(), b.as_array());
                    Some(std::array::from_fn(|i| eoc(ea[i], eb[i], prev.h, cur.h)))
                }
                _ => None,
            };
        }
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Fixed header, `{:.16e}` numbers; empty fields where no value exists.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let mut fields = vec![format!("{:.16e}", r.h)];
            let opt = |v: Option<[f64; 5]>| -> Vec<String> {
                match v {
                    Some(a) => a.iter().map(|x| format!("{x:.16e}")).collect(),
                    None => vec![String::new(); 5],
                }
            };
            fields.extend(opt(r.errors.map(|e| e.as_array())));
            fields.extend(opt(r.eoc));
            fields.push(r.iterations.to_string());
            fields.push(r.converged.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Optimizes every `(s, level)` pair of `setup` and tabulates the errors.
pub fn run_convergence_study(
    setup: &StudySetup,
    example: u32,
    s_list: &[f64],
    scheme: Scheme,
    cfg: &OptimizerConfig,
) -> Result<Vec<EocTable>> {
    if setup.levels() < 3 {
        return Err(Error::InvalidConfig("a convergence study needs at least 3 mesh levels".into()));
    }
    let cfg = OptimizerConfig { scheme, ..*cfg };
    let jobs: Vec<(f64, usize)> = s_list.iter().flat_map(|&s| (0..setup.levels()).map(move |l| (s, l))).collect();
    let rows: Vec<Result<EocRow>> = jobs
        .par_iter()
        .map(|&(s, level)| {
            let case = build_case(example, s)?;
            let mesh = setup.mesh(level);
            let k = setup.stiffness(level, s)?;
            let result = optimize(&case.problem(mesh, &k)?, &cfg)?;
            let errors = if result.converged {
                Some(error_norms(&result, &case, mesh, &k)?)
            } else {
                None
            };
            Ok(EocRow {
                level,
                h: mesh.h_max(),
                errors,
                eoc: None,
                iterations: result.iterations,
                converged: result.converged,
            })
        })
        .collect();
    let mut rows = rows.into_iter();
    let mut tables = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let mut table = EocTable {
            example,
            s,
            scheme,
            rows: rows.by_ref().take(setup.levels()).collect::<Result<_>>()?,
        };
        table.fill_eocs();
        tables.push(table);
    }
    Ok(tables)
}

/// Solution of `(−Δ)^s u = 1` on one mesh of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRow {
    pub level: usize,
    pub h: f64,
    pub e_l2: f64,
    pub u_origin: f64,
    pub eoc_l2: Option<f64>,
}

pub fn ball_csv(rows: &[BallRow], s: f64) -> String {
    let mut out = String::from("h,e_u_L2,u_origin,u_origin_exact,eoc_u_L2\n");
    for r in rows {
        let e = r.eoc_l2.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{e}", r.h, r.e_l2, r.u_origin, ball_constant(s));
    }
    out
}

pub fn run_ball_study(setup: &StudySetup, s: f64) -> Result<Vec<BallRow>> {
    let mut rows: Vec<BallRow> = Vec::with_capacity(setup.levels());
    for level in 0..setup.levels() {
        let mesh = setup.mesh(level);
        let k = setup.stiffness(level, s)?;
        let mut sys = PdeSystem::new(mesh, &k, ElementField::constant(mesh, FieldLayout::PiecewiseConstant, 0.0))?;
        let rule = DataRule::new(mesh);
        let u = sys.solve_state(&rule.load_vector(mesh, &rule.sample(|_| 1.0)))?;
        let e_l2 = rule.l2_distance_sq(mesh, &u.values, &rule.sample(|x| ball_solution(s, x))).sqrt();
        let origin = mesh
            .interior_vertices()
            .iter()
            .position(|&v| {
                let p = mesh.vertices()[v];
                p[0].hypot(p[1]) < 1e-12
            })
            .ok_or_else(|| Error::InvalidMesh("disc mesh has no vertex at the origin".into()))?;
        let h = mesh.h_max();
        let eoc_l2 = rows.last().map(|r| eoc(r.e_l2, e_l2, r.h, h));
        rows.push(BallRow {
            level,
            h,
            e_l2,
            u_origin: u.values[origin],
            eoc_l2,
        });
    }
    Ok(rows)
}

/// Log-log plots of the study CSVs, one panel per error quantity.
pub fn gnuplot_script(csv_files: &[(f64, String)], output: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set terminal pngcairo size 1500,900");
    let _ = writeln!(out, "set output '{output}'");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set logscale xy");
    let _ = writeln!(out, "set key bottom right");
    let _ = writeln!(out, "set multiplot layout 2,3");
    let panels = [(2, "|u - u_h|_s"), (3, "|u - u_h|_{L2}"), (4, "|p - p_h|_s"), (5, "|p - p_h|_{L2}"), (6, "|q - q_h|_{L2}")];
    for (col, title) in panels {
        let _ = writeln!(out, "set title '{title}'");
        let _ = writeln!(out, "set xlabel 'h'");
        let curves: Vec<String> = csv_files
            .iter()
            .map(|(s, f)| format!("'{f}' using 1:{col} every ::1 with linespoints title 's = {s}'"))
            .collect();
        let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    }
    let _ = writeln!(out, "unset multiplot");
    out
}
