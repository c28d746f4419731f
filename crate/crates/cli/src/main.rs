use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fraclap_cli::{configure_threads, run, RunConfig, RunError, EXIT_CONFIG, EXIT_IO, EXIT_NOT_CONVERGED};

/// Fractional Laplacian solves, bilinear optimal control and convergence studies.
///
/// Settings come from an optional key=value file; flags override it.
#[derive(Debug, Parser)]
#[command(name = "fraclap", version)]
struct Args {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// solve_state, optimize, study or selfcheck.
    #[arg(long)]
    mode: Option<String>,
    /// Manufactured example: 1, 2 or 3.
    #[arg(long)]
    example: Option<String>,
    /// Comma-separated fractional orders.
    #[arg(long)]
    s: Option<String>,
    /// fully_discrete or semidiscrete.
    #[arg(long)]
    scheme: Option<String>,
    /// Number of nested meshes.
    #[arg(long)]
    levels: Option<String>,
    /// Output root directory.
    #[arg(long)]
    out: Option<String>,
    /// Optimality residual tolerance.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_newton: Option<String>,
    #[arg(long)]
    max_fallback: Option<String>,
    #[arg(long)]
    krylov_tol: Option<String>,
    /// Gauss points per direction for touching element pairs.
    #[arg(long)]
    quad_singular: Option<String>,
    /// Gauss points per direction for nearby element pairs.
    #[arg(long)]
    quad_near: Option<String>,
    /// Gauss points per direction for distant element pairs.
    #[arg(long)]
    quad_far: Option<String>,
    /// Angular nodes of the complement weight.
    #[arg(long)]
    n_angles: Option<String>,
    /// Seed for the random directions of the self-check.
    #[arg(long)]
    seed: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("mode", &self.mode),
            ("example", &self.example),
            ("s", &self.s),
            ("scheme", &self.scheme),
            ("levels", &self.levels),
            ("out", &self.out),
            ("tol", &self.tol),
            ("max_newton", &self.max_newton),
            ("max_fallback", &self.max_fallback),
            ("krylov_tol", &self.krylov_tol),
            ("quad_singular", &self.quad_singular),
            ("quad_near", &self.quad_near),
            ("quad_far", &self.quad_far),
            ("n_angles", &self.n_angles),
            ("seed", &self.seed),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

fn load(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    for (k, v) in args.overrides() {
        cfg.set(k, v).map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Err(e) = configure_threads(std::env::var("FRACLAP_THREADS").ok().as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    match run(&cfg) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED as u8)
            }
        }
        Err(RunError::Io { path, source }) => {
            eprintln!("error: cannot write {}: {source}", path.display());
            ExitCode::from(EXIT_IO as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
