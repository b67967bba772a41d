//! `tsvarlab` command line: `solve`, `check` and `sweep` over a problem file.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 solver failure,
//! 3 invalid input, 4 a measured quantity exceeded `--tol`.
//!
//! Reports are CSV with a header row, `.` as decimal separator, every number
//! in `{:.16e}` form (17 significant digits) and LF line endings. With
//! `--out` the file is written to a temporary sibling and renamed into place.
//! One-line summaries such as `max_abs=<value>` go to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::noether::{
    check_invariance_fixed_time, check_invariance_time_transform, noether_quantity, noether_quantity_fixed_time,
    ConservationReport, Graininess, InvarianceReport, NoetherError, SymmetryGenerator,
};
use crate::scenario::{Scenario, ScenarioError};
use crate::variational::{el_residual, solve_el, Problem, Solution, Trajectory, VariationalError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

/// Sweep residuals at or below this are reported with order `exact`.
pub const EXACT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "tsvarlab", version, about = "Variational problems and Noether conservation laws on time scales")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Euler-Lagrange boundary-value problem and write the trajectory.
    Solve {
        file: PathBuf,
        /// Initial guess: a trajectory CSV as written by `solve`.
        #[arg(long)]
        guess: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Measure EL residuals, invariance discrepancies or conservation residuals.
    Check {
        file: PathBuf,
        which: Which,
        /// Evaluate along this trajectory CSV instead of the solved extremal.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Conservation residual and action over a list of grid steps.
    Sweep {
        file: PathBuf,
        /// Decreasing steps; defaults to h, h/10, h/100 from the file.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    El,
    Invariance,
    Conservation,
}

#[derive(Debug, Args)]
struct Common {
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pass/fail threshold for `check`.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Transformation parameters for `check invariance`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.5, -0.1, 0.1, 0.5])]
    eps: Vec<f64>,
    /// Only report measurements; always exit 0 unless an error occurs.
    #[arg(long)]
    report_only: bool,
    /// Suppress summary lines on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Output { .. } => EXIT_IO,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn solver_error(e: VariationalError) -> CliError {
    match e {
        VariationalError::Dimension { .. } | VariationalError::GridTooShort(_) | VariationalError::ForeignGrid => {
            CliError::Input(e.to_string())
        }
        _ => CliError::Solver(e.to_string()),
    }
}

fn noether_error(e: NoetherError) -> CliError {
    match e {
        NoetherError::Variational(v) => solver_error(v),
        other => CliError::Input(other.to_string()),
    }
}

/// A CSV table; `None` cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    fn new(header: impl IntoIterator<Item = String>) -> Self {
        Self { header: header.into_iter().collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            let fields = row.iter().map(|c| match c {
                Cell::Num(x) => format_number(*x),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            });
            w.write_record(fields).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Output { path: path.display().to_string(), message: e.to_string() };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| err(&e))?;
    tmp.write_all(bytes).map_err(|e| err(&e))?;
    tmp.as_file().sync_all().map_err(|e| err(&e))?;
    tmp.persist(path).map_err(|e| err(&e.error))?;
    Ok(())
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = table.to_csv();
    match out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Output { path: "stdout".into(), message: e.to_string() })
        }
    }
}

/// Reads a trajectory CSV (columns `t`, `q_1..q_n`; others ignored) and
/// checks that its times are the problem's grid points.
pub fn read_trajectory(p: &Problem, path: &Path) -> Result<Trajectory, CliError> {
    let name = path.display().to_string();
    let bad = |msg: String| CliError::Input(format!("{name}: {msg}"));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |h: &str| headers.iter().position(|x| x == h).ok_or_else(|| bad(format!("missing column {h}")));
    let t_col = column("t")?;
    let q_cols = (1..=p.dim()).map(|k| column(&format!("q_{k}"))).collect::<Result<Vec<_>, _>>()?;
    let points = p.grid().points();
    let mut values = Vec::with_capacity(points.len() * p.dim());
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64, CliError> {
            let s = record.get(c).unwrap_or("");
            s.trim().parse::<f64>().map_err(|_| bad(format!("row {}: cannot read {s:?} as a number", r + 1)))
        };
        let t = num(t_col)?;
        match points.get(r) {
            Some(&g) if (t - g).abs() <= 1e-12 * g.abs().max(1.0) => {}
            _ => return Err(bad(format!("row {}: t = {t} is not grid point {}", r + 1, r))),
        }
        for &c in &q_cols {
            values.push(num(c)?);
        }
        rows += 1;
    }
    if rows != points.len() {
        return Err(bad(format!("expected {} rows, got {rows}", points.len())));
    }
    p.trajectory(values).map_err(|e| bad(e.to_string()))
}

/// Trajectory table: `t, q_1..q_n, qd_1..qd_n`, `qd` empty at the last point.
pub fn trajectory_table(q: &Trajectory) -> Table {
    let n = q.dim();
    let header = std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("q_{k}")))
        .chain((1..=n).map(|k| format!("qd_{k}")));
    let mut table = Table::new(header);
    let grid = q.grid();
    for i in 0..q.len() {
        let mut row = vec![Cell::Num(grid.point(i))];
        row.extend(q.at(i).iter().map(|&x| Cell::Num(x)));
        if i + 1 < q.len() {
            let mu = grid.mu_at(i);
            row.extend((0..n).map(|k| Cell::Num((q.at(i + 1)[k] - q.at(i)[k]) / mu)));
        } else {
            row.extend((0..n).map(|_| Cell::Empty));
        }
        table.rows.push(row);
    }
    table
}

/// EL residual table on `T^{κ²}`: `t, el_1..el_n`.
pub fn el_table(p: &Problem, q: &Trajectory) -> Result<(Table, f64), CliError> {
    let r = el_residual(p, q).map_err(solver_error)?;
    let header = std::iter::once("t".to_string()).chain((1..=r.dim()).map(|k| format!("el_{k}")));
    let mut table = Table::new(header);
    let mut max_abs = 0.0f64;
    for i in 0..r.len() {
        let mut row = vec![Cell::Num(r.grid().point(i))];
        for &x in r.at(i) {
            max_abs = max_abs.max(x.abs());
            row.push(Cell::Num(x));
        }
        table.rows.push(row);
    }
    Ok((table, max_abs))
}

/// The conserved quantity the file's symmetry calls for: `∂₃L·ξ` when the
/// family fixes time, else the full quantity with the grid's graininess.
pub fn conservation_report(p: &Problem, q: &Trajectory, gen: &SymmetryGenerator) -> Result<ConservationReport, CliError> {
    let report = if gen.fixes_time() {
        noether_quantity_fixed_time(p, q, gen)
    } else {
        noether_quantity(p, q, gen, Graininess::Grid)
    };
    report.map_err(noether_error)
}

/// Conservation table on `T^κ`: `t, C, dC_dt`, `dC_dt` empty at the last point.
pub fn conservation_table(report: &ConservationReport) -> Table {
    let mut table = Table::new(["t", "C", "dC_dt"].map(String::from));
    for (i, (&t, &c)) in report.times.iter().zip(&report.values).enumerate() {
        let d = report.residuals.get(i).map_or(Cell::Empty, |&r| Cell::Num(r));
        table.rows.push(vec![Cell::Num(t), Cell::Num(c), d]);
    }
    table
}

pub fn invariance_report(
    p: &Problem,
    q: &Trajectory,
    gen: &SymmetryGenerator,
    eps: &[f64],
) -> Result<InvarianceReport, CliError> {
    let report = if gen.fixes_time() {
        check_invariance_fixed_time(p, q, gen, eps)
    } else {
        check_invariance_time_transform(p, q, gen, eps)
    };
    report.map_err(noether_error)
}

/// Invariance table on `T^κ`: `t` and one scaled cell discrepancy column per `ε`.
pub fn invariance_table(report: &InvarianceReport) -> Table {
    let header = std::iter::once("t".to_string()).chain(report.rows.iter().map(|r| format!("eps={}", r.eps)));
    let mut table = Table::new(header);
    for (i, &t) in report.cell_times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        row.extend(report.rows.iter().map(|r| Cell::Num(r.discrepancies[i])));
        table.rows.push(row);
    }
    table
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub action: f64,
    pub max_residual: f64,
}

/// Observed orders `log(r_{k-1}/r_k) / log(h_{k-1}/h_k)`; `None` for the
/// first row, `Some(None)` (printed `exact`) when both residuals vanish.
pub fn sweep_orders(rows: &[SweepRow]) -> Vec<Option<Option<f64>>> {
    (0..rows.len())
        .map(|k| {
            if k == 0 {
                return None;
            }
            let (a, b) = (&rows[k - 1], &rows[k]);
            if a.max_residual <= EXACT_RESIDUAL && b.max_residual <= EXACT_RESIDUAL {
                Some(None)
            } else {
                Some(Some((a.max_residual / b.max_residual).ln() / (a.h / b.h).ln()))
            }
        })
        .collect()
}

pub fn sweep(scenario: &Scenario, hs: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let gen = scenario
        .symmetry()
        .ok_or_else(|| CliError::Input("symmetry: section is required for sweep".into()))?;
    if scenario.step().is_none() {
        return Err(CliError::Input("timescale.kind: sweep needs a uniform or sampled time scale".into()));
    }
    if hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(CliError::Input("--h: steps must be positive".into()));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Input("--h: steps must be strictly decreasing".into()));
    }
    hs.par_iter()
        .map(|&h| {
            let s = scenario.with_step(h).expect("step kind checked above")?;
            let sol = solve_el(s.problem(), None, s.solver()).map_err(solver_error)?;
            let report = conservation_report(s.problem(), &sol.trajectory, gen)?;
            Ok(SweepRow { h, action: sol.action, max_residual: report.max_abs })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut table = Table::new(["h", "action", "max_residual", "order"].map(String::from));
    for (row, order) in rows.iter().zip(sweep_orders(rows)) {
        let order = match order {
            None => Cell::Empty,
            Some(None) => Cell::Text("exact".into()),
            Some(Some(p)) => Cell::Num(p),
        };
        table.rows.push(vec![Cell::Num(row.h), Cell::Num(row.action), Cell::Num(row.max_residual), order]);
    }
    table
}

struct Session {
    quiet: bool,
}

impl Session {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", line.as_ref());
        }
    }
}

fn solved(scenario: &Scenario, guess: Option<&Path>) -> Result<Solution, CliError> {
    let p = scenario.problem();
    let guess = guess.map(|g| read_trajectory(p, g)).transpose()?;
    solve_el(p, guess.as_ref(), scenario.solver()).map_err(solver_error)
}

fn along(scenario: &Scenario, trajectory: Option<&Path>) -> Result<Trajectory, CliError> {
    match trajectory {
        Some(path) => read_trajectory(scenario.problem(), path),
        None => Ok(solved(scenario, None)?.trajectory),
    }
}

fn require_symmetry(scenario: &Scenario) -> Result<&SymmetryGenerator, CliError> {
    scenario.symmetry().ok_or_else(|| CliError::Input("symmetry: section is required for this check".into()))
}

fn verdict(s: &Session, common: &Common, max_abs: f64) -> i32 {
    s.say(format!("max_abs={}", format_number(max_abs)));
    if common.report_only || max_abs <= common.tol {
        EXIT_OK
    } else {
        s.say(format!("max_abs exceeds tol={}", format_number(common.tol)));
        EXIT_TOLERANCE
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { file, guess, common } => {
            let s = Session { quiet: common.quiet };
            let scenario = Scenario::from_path(&file)?;
            let sol = solved(&scenario, guess.as_deref())?;
            emit(&trajectory_table(&sol.trajectory), common.out.as_deref())?;
            s.say(format!(
                "action={} gradient_norm={} iterations={}",
                format_number(sol.action),
                format_number(sol.gradient_norm),
                sol.iterations
            ));
            Ok(EXIT_OK)
        }
        Command::Check { file, which, trajectory, common } => {
            let s = Session { quiet: common.quiet };
            let scenario = Scenario::from_path(&file)?;
            let p = scenario.problem();
            let gen = match which {
                Which::El => None,
                _ => Some(require_symmetry(&scenario)?),
            };
            if which == Which::Invariance && common.eps.is_empty() {
                return Err(CliError::Input("--eps: at least one value is required".into()));
            }
            let q = along(&scenario, trajectory.as_deref())?;
            let max_abs = match (which, gen) {
                (Which::El, _) => {
                    let (table, max_abs) = el_table(p, &q)?;
                    emit(&table, common.out.as_deref())?;
                    max_abs
                }
                (Which::Invariance, Some(gen)) => {
                    let report = invariance_report(p, &q, gen, &common.eps)?;
                    emit(&invariance_table(&report), common.out.as_deref())?;
                    s.say(format!(
                        "action={} d_action_d_eps={}",
                        format_number(report.action),
                        format_number(report.d_action_d_eps)
                    ));
                    report.max_discrepancy()
                }
                (_, Some(gen)) => {
                    let report = conservation_report(p, &q, gen)?;
                    emit(&conservation_table(&report), common.out.as_deref())?;
                    report.max_abs
                }
                (_, None) => unreachable!("symmetry required above"),
            };
            Ok(verdict(&s, &common, max_abs))
        }
        Command::Sweep { file, h, common } => {
            let s = Session { quiet: common.quiet };
            let scenario = Scenario::from_path(&file)?;
            let hs = if h.is_empty() {
                let h0 = scenario
                    .step()
                    .ok_or_else(|| CliError::Input("timescale.kind: sweep needs a uniform or sampled time scale".into()))?;
                vec![h0, h0 / 10.0, h0 / 100.0]
            } else {
                h
            };
            let rows = sweep(&scenario, &hs)?;
            emit(&sweep_table(&rows), common.out.as_deref())?;
            let max_abs = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
            s.say(format!("max_abs={}", format_number(max_abs)));
            match sweep_orders(&rows).last() {
                Some(Some(Some(p))) => s.say(format!("order={}", format_number(*p))),
                Some(Some(None)) => s.say("order=exact"),
                _ => {}
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
