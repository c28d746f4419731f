//! Flat `key = value` run configuration.

use std::path::PathBuf;

use fraclap::fracfem::AssemblyConfig;
use fraclap::optctl::{OptimizerConfig, Scheme};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SolveState,
    Optimize,
    Study,
    Selfcheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveState => "solve_state",
            Mode::Optimize => "optimize",
            Mode::Study => "study",
            Mode::Selfcheck => "selfcheck",
        }
    }
}

/// Every accepted key with its default, in documentation order.
pub const KEYS: [(&str, &str); 15] = [
    ("mode", "optimize"),
    ("example", "1"),
    ("s", "0.5"),
    ("scheme", "fully_discrete"),
    ("levels", "4"),
    ("out", "out"),
    ("tol", "1e-9"),
    ("max_newton", "30"),
    ("max_fallback", "200"),
    ("krylov_tol", "1e-2"),
    ("quad_singular", "5"),
    ("quad_near", "4"),
    ("quad_far", "2"),
    ("n_angles", "64"),
    ("seed", "0"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub example: u32,
    pub s: Vec<f64>,
    pub scheme: Scheme,
    /// Number of meshes: `make_disc_mesh(16)` and `levels − 1` refinements.
    pub levels: usize,
    pub out: PathBuf,
    pub assembly: AssemblyConfig,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            mode: Mode::Optimize,
            example: 1,
            s: Vec::new(),
            scheme: Scheme::FullyDiscrete,
            levels: 0,
            out: PathBuf::new(),
            assembly: AssemblyConfig::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
        };
        for (k, v) in KEYS {
            cfg.set(k, v).expect("defaults are valid");
        }
        cfg
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        msg: format!("cannot parse `{v}`"),
    })
}

impl RunConfig {
    /// Parses a config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (key, value) in parse_pairs(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key; the value is checked on its own.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let bad = |msg: &str| {
            Err(ConfigError::BadValue {
                key: key.into(),
                msg: msg.into(),
            })
        };
        match key {
            "mode" => {
                self.mode = match v {
                    "solve_state" => Mode::SolveState,
                    "optimize" => Mode::Optimize,
                    "study" => Mode::Study,
                    "selfcheck" => Mode::Selfcheck,
                    _ => return bad("expected solve_state, optimize, study or selfcheck"),
                }
            }
            "example" => {
                let e: u32 = parse(key, v)?;
                if !(1..=3).contains(&e) {
                    return bad("expected 1, 2 or 3");
                }
                self.example = e;
            }
            "s" => {
                let list: Vec<f64> = v.split(',').map(|x| parse(key, x.trim())).collect::<Result<_, _>>()?;
                if list.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
                    return bad("every order must lie in (0, 1)");
                }
                self.s = list;
            }
            "scheme" => match Scheme::parse(v) {
                Some(s) => self.scheme = s,
                None => return bad("expected fully_discrete or semidiscrete"),
            },
            "levels" => {
                let l: usize = parse(key, v)?;
                if !(1..=6).contains(&l) {
                    return bad("expected 1..=6");
                }
                self.levels = l;
            }
            "out" => {
                if v.is_empty() {
                    return bad("empty path");
                }
                self.out = PathBuf::from(v);
            }
            "tol" => self.optimizer.tol_residual = parse(key, v)?,
            "max_newton" => self.optimizer.max_newton = parse(key, v)?,
            "max_fallback" => self.optimizer.max_fallback = parse(key, v)?,
            "krylov_tol" => self.optimizer.krylov_tol = parse(key, v)?,
            "quad_singular" => self.assembly.quad_singular = parse(key, v)?,
            "quad_near" => self.assembly.quad_near = parse(key, v)?,
            "quad_far" => self.assembly.quad_far = parse(key, v)?,
            "n_angles" => self.assembly.n_angles = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Cross-field checks, run once all keys are set.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |key: &str, e: fraclap::Error| ConfigError::BadValue {
            key: key.into(),
            msg: e.to_string(),
        };
        self.assembly.validate().map_err(|e| wrap("assembly", e))?;
        self.optimizer.validate().map_err(|e| wrap("optimizer", e))?;
        if self.mode == Mode::Study && self.levels < 3 {
            return Err(ConfigError::BadValue {
                key: "levels".into(),
                msg: "a study needs at least 3 levels".into(),
            });
        }
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            scheme: self.scheme,
            ..self.optimizer
        }
    }
}

/// Splits `key = value` lines; `#` starts a comment, blank lines are skipped,
/// and a key may appear only once.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: k + 1,
                msg: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
            return Err(ConfigError::Syntax {
                line: k + 1,
                msg: format!("invalid key `{key}`"),
            });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(ConfigError::DuplicateKey(key.into()));
        }
        out.push((key.into(), value.into()));
    }
    Ok(out)
}
