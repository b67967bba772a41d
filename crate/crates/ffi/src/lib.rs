//! C ABI over `tsvarlab`.
//!
//! Problems and trajectories are opaque heap handles; every call returns a
//! [`TsvStatus`] and reports its result through out-pointers. Status values
//! match the exit codes of the `tsvarlab` command line. After a failure,
//! [`tsv_last_error_message`] describes it.
//!
//! Array results use a size query protocol: the required element count is
//! always stored in `*len`, and the data is copied only when `cap` is large
//! enough. Pass `buf = NULL, cap = 0` to query the size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tsvarlab::cli::{conservation_report, invariance_report, CliError};
use tsvarlab::scenario::Scenario;
use tsvarlab::variational::{action, el_residual, solve_el, Trajectory, VariationalError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsvStatus {
    Ok = 0,
    SolverFailure = 2,
    InvalidInput = 3,
    NullPointer = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// A parsed problem file.
pub struct TsvProblem {
    scenario: Scenario,
}

/// A trajectory on a problem's grid, with solver statistics when solved.
pub struct TsvTrajectory {
    trajectory: Trajectory,
    iterations: usize,
    gradient_norm: f64,
}

struct Failure(TsvStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = if e.exit_code() == TsvStatus::SolverFailure as i32 {
            TsvStatus::SolverFailure
        } else {
            TsvStatus::InvalidInput
        };
        Failure(status, e.to_string())
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure(TsvStatus::InvalidInput, e.to_string())
}

fn variational(e: VariationalError) -> Failure {
    match e {
        VariationalError::NonConvergence { .. } | VariationalError::SingularJacobian { .. } | VariationalError::Eval { .. } => {
            Failure(TsvStatus::SolverFailure, e.to_string())
        }
        other => invalid(other),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TsvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            TsvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TsvStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure(TsvStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure(TsvStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn copy_out(data: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Failure> {
    *out(len, "len")? = data.len();
    if cap < data.len() {
        return Err(Failure(TsvStatus::BufferTooSmall, format!("need {} elements, capacity is {cap}", data.len())));
    }
    if !data.is_empty() {
        if buf.is_null() {
            return Err(Failure(TsvStatus::NullPointer, "buf is NULL".into()));
        }
        std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    }
    Ok(())
}

fn same_grid(p: &TsvProblem, q: &TsvTrajectory) -> Result<(), Failure> {
    let (a, b) = (p.scenario.problem(), &q.trajectory);
    if a.grid().points() != b.grid().points() || a.dim() != b.dim() {
        return Err(invalid("trajectory does not belong to this problem"));
    }
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `tsv_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tsv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a problem file given as a NUL-terminated UTF-8 string.
///
/// # Safety
/// `text` must be a valid C string and `out_problem` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsv_problem_from_str(text: *const c_char, out_problem: *mut *mut TsvProblem) -> TsvStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = std::ptr::null_mut();
        if text.is_null() {
            return Err(Failure(TsvStatus::NullPointer, "text is NULL".into()));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| invalid(format!("text is not UTF-8: {e}")))?;
        let scenario: Scenario = text.parse().map_err(invalid)?;
        *slot = Box::into_raw(Box::new(TsvProblem { scenario }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`tsv_problem_from_str`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tsv_problem_free(problem: *mut TsvProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of grid points; 0 for NULL.
///
/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsv_problem_len(problem: *const TsvProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.scenario.problem().grid().len())
}

/// State dimension; 0 for NULL.
///
/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsv_problem_dim(problem: *const TsvProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.scenario.problem().dim())
}

/// Copies the grid points.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_problem_grid(problem: *const TsvProblem, buf: *mut f64, cap: usize, len: *mut usize) -> TsvStatus {
    guard(|| copy_out(deref(problem, "problem")?.scenario.problem().grid().points(), buf, cap, len))
}

/// Solves the Euler-Lagrange boundary-value problem from the linear guess.
///
/// # Safety
/// `problem` must be a live handle and `out_trajectory` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsv_solve(problem: *const TsvProblem, out_trajectory: *mut *mut TsvTrajectory) -> TsvStatus {
    guard(|| {
        let slot = out(out_trajectory, "out_trajectory")?;
        *slot = std::ptr::null_mut();
        let s = &deref(problem, "problem")?.scenario;
        let sol = solve_el(s.problem(), None, s.solver()).map_err(variational)?;
        *slot = Box::into_raw(Box::new(TsvTrajectory {
            trajectory: sol.trajectory,
            iterations: sol.iterations,
            gradient_norm: sol.gradient_norm,
        }));
        Ok(())
    })
}

/// Wraps `len(problem) * dim(problem)` row-major values as a trajectory.
///
/// # Safety
/// `values` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsv_trajectory_from_values(
    problem: *const TsvProblem,
    values: *const f64,
    count: usize,
    out_trajectory: *mut *mut TsvTrajectory,
) -> TsvStatus {
    guard(|| {
        let slot = out(out_trajectory, "out_trajectory")?;
        *slot = std::ptr::null_mut();
        let p = deref(problem, "problem")?.scenario.problem();
        let data = if count == 0 { &[][..] } else { std::slice::from_raw_parts(deref(values, "values")?, count) };
        let trajectory = p.trajectory(data.to_vec()).map_err(invalid)?;
        *slot = Box::into_raw(Box::new(TsvTrajectory { trajectory, iterations: 0, gradient_norm: f64::NAN }));
        Ok(())
    })
}

/// # Safety
/// `trajectory` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tsv_trajectory_free(trajectory: *mut TsvTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Copies the row-major values (`len * dim` doubles).
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_trajectory_values(
    trajectory: *const TsvTrajectory,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TsvStatus {
    guard(|| copy_out(deref(trajectory, "trajectory")?.trajectory.values(), buf, cap, len))
}

/// Newton iterations and final gradient max-norm; NaN norm for trajectories
/// not produced by [`tsv_solve`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_trajectory_stats(
    trajectory: *const TsvTrajectory,
    iterations: *mut usize,
    gradient_norm: *mut f64,
) -> TsvStatus {
    guard(|| {
        let q = deref(trajectory, "trajectory")?;
        *out(iterations, "iterations")? = q.iterations;
        *out(gradient_norm, "gradient_norm")? = q.gradient_norm;
        Ok(())
    })
}

/// Discrete action of `trajectory`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_action(problem: *const TsvProblem, trajectory: *const TsvTrajectory, value: *mut f64) -> TsvStatus {
    guard(|| {
        let (p, q) = (deref(problem, "problem")?, deref(trajectory, "trajectory")?);
        same_grid(p, q)?;
        *out(value, "value")? = action(p.scenario.problem(), &q.trajectory).map_err(variational)?;
        Ok(())
    })
}

/// Euler-Lagrange residual on all but the last two grid points, row-major.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_el_residual(
    problem: *const TsvProblem,
    trajectory: *const TsvTrajectory,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TsvStatus {
    guard(|| {
        let (p, q) = (deref(problem, "problem")?, deref(trajectory, "trajectory")?);
        same_grid(p, q)?;
        let r = el_residual(p.scenario.problem(), &q.trajectory).map_err(variational)?;
        copy_out(r.values(), buf, cap, len)
    })
}

/// Conserved quantity `C` of the file's symmetry on all but the last grid
/// point, plus the largest `|ΔC/Δt|`.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` and `max_abs` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_conservation(
    problem: *const TsvProblem,
    trajectory: *const TsvTrajectory,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
    max_abs: *mut f64,
) -> TsvStatus {
    guard(|| {
        let (p, q) = (deref(problem, "problem")?, deref(trajectory, "trajectory")?);
        same_grid(p, q)?;
        let gen = p.scenario.symmetry().ok_or_else(|| invalid("problem has no [symmetry] section"))?;
        let report = conservation_report(p.scenario.problem(), &q.trajectory, gen)?;
        *out(max_abs, "max_abs")? = report.max_abs;
        copy_out(&report.values, buf, cap, len)
    })
}

/// Largest scaled cell discrepancy of the action over the `n_eps` values.
///
/// # Safety
/// `eps` must hold `n_eps` doubles; `max_abs` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tsv_invariance(
    problem: *const TsvProblem,
    trajectory: *const TsvTrajectory,
    eps: *const f64,
    n_eps: usize,
    max_abs: *mut f64,
) -> TsvStatus {
    guard(|| {
        let (p, q) = (deref(problem, "problem")?, deref(trajectory, "trajectory")?);
        same_grid(p, q)?;
        if n_eps == 0 {
            return Err(invalid("at least one eps is required"));
        }
        let eps = std::slice::from_raw_parts(deref(eps, "eps")?, n_eps);
        let gen = p.scenario.symmetry().ok_or_else(|| invalid("problem has no [symmetry] section"))?;
        let report = invariance_report(p.scenario.problem(), &q.trajectory, gen, eps)?;
        *out(max_abs, "max_abs")? = report.max_discrepancy();
        Ok(())
    })
}
