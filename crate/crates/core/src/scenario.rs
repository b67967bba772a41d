//! Problem files: a small TOML document with `[timescale]`, `[problem]`,
//! optional `[symmetry]` and optional `[solver]` sections.
//!
//! ```toml
//! [timescale]
//! kind = "power2"          # integers | uniform | power2 | explicit | sampled
//! n0 = 0
//! n1 = 4
//!
//! [problem]
//! dim = 1
//! lagrangian = "qs1^2 / t + t * qd1^2"
//! qa = [1.0]
//! qb = [13.0]
//!
//! [symmetry]
//! tau = "t"
//! xi = ["0"]
//! tbar = "t * exp(eps)"    # optional exact family, together with qbar
//! qbar = ["q1"]
//!
//! [solver]
//! tol = 1e-12
//! max_iter = 100
//! ```
//!
//! Every validation error names the offending field, e.g. `problem.qa`.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::noether::{NoetherError, SymmetryGenerator};
use crate::timescale::{TimeScaleGrid, TimeScaleSpec};
use crate::variational::{Lagrangian, Problem, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

fn field(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    timescale: Option<RawTimescale>,
    problem: Option<RawProblem>,
    symmetry: Option<RawSymmetry>,
    solver: Option<RawSolver>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimescale {
    kind: String,
    a: Option<f64>,
    b: Option<f64>,
    h: Option<f64>,
    n0: Option<i64>,
    n1: Option<i64>,
    points: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    dim: usize,
    lagrangian: String,
    qa: Vec<f64>,
    qb: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymmetry {
    tau: String,
    xi: Vec<String>,
    tbar: Option<String>,
    qbar: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iter: Option<usize>,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct Scenario {
    timescale: TimeScaleSpec,
    problem: Problem,
    symmetry: Option<SymmetryGenerator>,
    solver: SolverOptions,
}

impl std::str::FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string().trim_end().to_string()))?;
        let ts = raw.timescale.ok_or_else(|| field("timescale", "section is required"))?;
        let timescale = timescale_spec(&ts)?;
        let pr = raw.problem.ok_or_else(|| field("problem", "section is required"))?;
        if pr.dim == 0 {
            return Err(field("problem.dim", "must be at least 1"));
        }
        let lagrangian = Lagrangian::parse(&pr.lagrangian, pr.dim).map_err(|e| field("problem.lagrangian", e))?;
        for (name, v) in [("problem.qa", &pr.qa), ("problem.qb", &pr.qb)] {
            if v.len() != pr.dim {
                return Err(field(name, format!("expected {} values, got {}", pr.dim, v.len())));
            }
        }
        let grid = TimeScaleGrid::new(&timescale).map_err(|e| field("timescale", e))?;
        let problem = Problem::new(Arc::new(grid), lagrangian, pr.qa, pr.qb).map_err(|e| field("problem", e))?;
        let symmetry = raw.symmetry.map(|s| symmetry(&s, pr.dim)).transpose()?;
        let mut solver = SolverOptions::default();
        if let Some(s) = raw.solver {
            if let Some(tol) = s.tol {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(field("solver.tol", "must be positive"));
                }
                solver.tol = tol;
            }
            if let Some(m) = s.max_iter {
                solver.max_iter = m;
            }
        }
        Ok(Self { timescale, problem, symmetry, solver })
    }
}

fn timescale_spec(ts: &RawTimescale) -> Result<TimeScaleSpec, ScenarioError> {
    let used: &[&str] = match ts.kind.as_str() {
        "integers" | "sampled" | "uniform" => &["a", "b", "h"],
        "power2" => &["n0", "n1"],
        "explicit" => &["points"],
        other => {
            return Err(field(
                "timescale.kind",
                format!("unknown kind \"{other}\" (expected integers, uniform, power2, explicit or sampled)"),
            ))
        }
    };
    let present = [
        ("a", ts.a.is_some()),
        ("b", ts.b.is_some()),
        ("h", ts.h.is_some()),
        ("n0", ts.n0.is_some()),
        ("n1", ts.n1.is_some()),
        ("points", ts.points.is_some()),
    ];
    for (name, is_set) in present {
        let allowed = used.contains(&name) && !(ts.kind == "integers" && name == "h");
        if is_set && !allowed {
            return Err(field(format!("timescale.{name}"), format!("not used by kind \"{}\"", ts.kind)));
        }
    }
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| field(format!("timescale.{name}"), "missing"));
    let need_int = |name: &str, v: Option<i64>| v.ok_or_else(|| field(format!("timescale.{name}"), "missing"));
    Ok(match ts.kind.as_str() {
        "integers" => {
            let int = |name: &str, v: Option<f64>| -> Result<i64, ScenarioError> {
                let x = need(name, v)?;
                if x.fract() != 0.0 || !x.is_finite() {
                    return Err(field(format!("timescale.{name}"), "must be an integer"));
                }
                Ok(x as i64)
            };
            TimeScaleSpec::Integers { a: int("a", ts.a)?, b: int("b", ts.b)? }
        }
        "uniform" => TimeScaleSpec::Uniform { a: need("a", ts.a)?, b: need("b", ts.b)?, h: need("h", ts.h)? },
        "sampled" => TimeScaleSpec::Sampled { a: need("a", ts.a)?, b: need("b", ts.b)?, h: need("h", ts.h)? },
        "power2" => {
            let exp = |name: &str, v: Option<i64>| -> Result<i32, ScenarioError> {
                i32::try_from(need_int(name, v)?).map_err(|_| field(format!("timescale.{name}"), "out of range"))
            };
            TimeScaleSpec::Power2 { n0: exp("n0", ts.n0)?, n1: exp("n1", ts.n1)? }
        }
        _ => TimeScaleSpec::Explicit(ts.points.clone().ok_or_else(|| field("timescale.points", "missing"))?),
    })
}

fn symmetry(s: &RawSymmetry, dim: usize) -> Result<SymmetryGenerator, ScenarioError> {
    let prefixed = |e: NoetherError| match e {
        NoetherError::Parse { field: f, source } => field(format!("symmetry.{f}"), source),
        NoetherError::Dimension { what, expected, got } => {
            field(format!("symmetry.{what}"), format!("expected {expected} values, got {got}"))
        }
        other => field("symmetry", other),
    };
    let xi: Vec<&str> = s.xi.iter().map(String::as_str).collect();
    let gen = SymmetryGenerator::parse(&s.tau, &xi, dim).map_err(prefixed)?;
    match (&s.tbar, &s.qbar) {
        (None, None) => Ok(gen),
        (Some(tbar), Some(qbar)) => {
            let qbar: Vec<&str> = qbar.iter().map(String::as_str).collect();
            gen.with_family(tbar, &qbar).map_err(prefixed)
        }
        (Some(_), None) => Err(field("symmetry.qbar", "required when tbar is given")),
        (None, Some(_)) => Err(field("symmetry.tbar", "required when qbar is given")),
    }
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        text.parse()
    }

    pub fn timescale(&self) -> &TimeScaleSpec {
        &self.timescale
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn symmetry(&self) -> Option<&SymmetryGenerator> {
        self.symmetry.as_ref()
    }

    pub fn solver(&self) -> &SolverOptions {
        &self.solver
    }

    /// Grid step for `uniform` and `sampled` time scales.
    pub fn step(&self) -> Option<f64> {
        match self.timescale {
            TimeScaleSpec::Uniform { h, .. } | TimeScaleSpec::Sampled { h, .. } => Some(h),
            _ => None,
        }
    }

    /// The same scenario on a grid of step `h`; `None` for kinds without a step.
    pub fn with_step(&self, h: f64) -> Option<Result<Self, ScenarioError>> {
        let timescale = match self.timescale {
            TimeScaleSpec::Uniform { a, b, .. } => TimeScaleSpec::Uniform { a, b, h },
            TimeScaleSpec::Sampled { a, b, .. } => TimeScaleSpec::Sampled { a, b, h },
            _ => return None,
        };
        let rebuilt = TimeScaleGrid::new(&timescale).map_err(|e| field("timescale", e)).and_then(|grid| {
            let p = &self.problem;
            Problem::new(Arc::new(grid), p.lagrangian().clone(), p.qa().to_vec(), p.qb().to_vec())
                .map_err(|e| field("problem", e))
        });
        Some(rebuilt.map(|problem| Self { timescale, problem, symmetry: self.symmetry.clone(), solver: self.solver }))
    }
}
