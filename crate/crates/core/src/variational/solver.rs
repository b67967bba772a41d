//! Newton's method on the stationarity conditions of the discrete action.
//!
//! The Hessian of the action in the interior unknowns is block tridiagonal
//! (cell `i` couples only `q_i` and `q_{i+1}`), so each Newton step is a
//! banded LU solve whose cost grows linearly with the number of grid points.

use nalgebra::DMatrix;

use super::{action, cell_arguments, gradient_from_partials, partials_along, Problem, Trajectory, VariationalError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Converged when `max|g| ≤ tol · (1 + |I[q]|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100, max_halvings: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    /// Newton steps taken (0 if the guess was already stationary).
    pub iterations: usize,
    pub gradient_norm: f64,
    pub action: f64,
}

struct State {
    values: Vec<f64>,
    gradient: Vec<f64>,
    action: f64,
}

impl State {
    fn grad_max(&self) -> f64 {
        self.gradient.iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    fn merit(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum()
    }
}

fn evaluate(p: &Problem, values: Vec<f64>) -> Result<State, VariationalError> {
    let q = p.trajectory(values)?;
    let parts = partials_along(p, &q)?;
    let gradient = gradient_from_partials(&q, &parts);
    let action = action(p, &q)?;
    Ok(State { values: q.into_values(), gradient, action })
}

/// Solves the discrete Euler–Lagrange boundary-value problem.
///
/// Returns whatever stationary point Newton reaches; for non-convex
/// Lagrangians it need not be a minimizer. Endpoints are never unknowns and
/// always equal the boundary data bit-exactly.
pub fn solve_el(p: &Problem, guess: Option<&Trajectory>, opts: &SolverOptions) -> Result<Solution, VariationalError> {
    p.require_three_points()?;
    let n = p.dim();
    let mut values = match guess {
        Some(g) => {
            p.check_trajectory(g)?;
            g.values().to_vec()
        }
        None => p.linear_guess().into_values(),
    };
    let last = (p.grid().len() - 1) * n;
    values[..n].copy_from_slice(p.qa());
    values[last..].copy_from_slice(p.qb());

    let mut state = evaluate(p, values)?;
    let mut iterations = 0;
    loop {
        let norm = state.grad_max();
        if norm <= opts.tol * (1.0 + state.action.abs()) {
            let trajectory = p.trajectory(state.values)?;
            return Ok(Solution { trajectory, iterations, gradient_norm: norm, action: state.action });
        }
        if iterations == opts.max_iter {
            return Err(VariationalError::NonConvergence { iterations, residual: norm });
        }
        let step = newton_step(p, &state)?;
        iterations += 1;

        let base = state.merit();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = state.values.clone();
            for (x, dx) in trial[n..last].iter_mut().zip(&step) {
                *x += scale * dx;
            }
            if let Ok(next) = evaluate(p, trial) {
                if next.merit() < base {
                    accepted = Some(next);
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some(next) => state = next,
            None => return Err(VariationalError::NonConvergence { iterations, residual: norm }),
        }
    }
}

/// Solves `J δ = -g` for the interior correction.
fn newton_step(p: &Problem, state: &State) -> Result<Vec<f64>, VariationalError> {
    let n = p.dim();
    let grid = p.grid();
    let q = p.trajectory(state.values.clone())?;
    let interior = q.len() - 2;

    let mut diag = vec![DMatrix::<f64>::zeros(n, n); interior];
    // upper[k] couples unknown k with k+1; lower[k] = upper[k]^T
    let mut upper = vec![DMatrix::<f64>::zeros(n, n); interior.saturating_sub(1)];

    for i in 0..q.len() - 1 {
        let (t, y, v) = cell_arguments(&q, i);
        let mu = grid.mu_at(i);
        let h = p
            .lagrangian()
            .second_partials(t, y, &v)
            .map_err(|source| VariationalError::Eval { cell: i, t, source })?;
        let yy = to_matrix(&h.yy);
        let yv = to_matrix(&h.yv);
        let vv = to_matrix(&h.vv) / mu;
        if i >= 1 {
            diag[i - 1] += &vv;
        }
        if i < interior {
            diag[i] += &yy * mu + &yv + yv.transpose() + &vv;
        }
        if i >= 1 && i < interior {
            upper[i - 1] -= yv.transpose() + &vv;
        }
    }

    let rhs: Vec<f64> = state.gradient.iter().map(|g| -g).collect();
    solve_banded(&diag, &upper, rhs).map_err(|k| VariationalError::SingularJacobian {
        index: k + 1,
        t: grid.point(k + 1),
        residual: state.grad_max(),
    })
}

/// Gaussian elimination with partial pivoting on the symmetric block
/// tridiagonal matrix with blocks `diag` and `upper`, stored as a band.
///
/// The matrix is in general indefinite, so a pivot-free block sweep can
/// break down on a vanishing leading minor even when the matrix is regular.
/// Row swaps stay within the lower bandwidth `kl = 2n - 1`, and fill-in is
/// confined to an upper bandwidth of `2 kl`. On failure returns the block
/// index of the vanishing pivot column.
fn solve_banded(diag: &[DMatrix<f64>], upper: &[DMatrix<f64>], mut rhs: Vec<f64>) -> Result<Vec<f64>, usize> {
    let m = diag.len();
    let n = diag.first().map_or(0, |d| d.nrows());
    let size = m * n;
    let kl = 2 * n - 1;
    let ku = 2 * kl;
    let width = kl + ku + 1;
    // band[r][c + kl - r] holds entry (r, c)
    let mut band = vec![vec![0.0; width]; size];
    for k in 0..m {
        for a in 0..n {
            let r = k * n + a;
            for b in 0..n {
                band[r][k * n + b + kl - r] = diag[k][(a, b)];
                if k + 1 < m {
                    band[r][(k + 1) * n + b + kl - r] = upper[k][(a, b)];
                }
                if k > 0 {
                    band[r][(k - 1) * n + b + kl - r] = upper[k - 1][(b, a)];
                }
            }
        }
    }
    let scale = band.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if !(scale.is_finite() && scale > 0.0) {
        return Err(0);
    }

    for k in 0..size {
        let last = (k + kl).min(size - 1);
        let p = (k..=last)
            .max_by(|&x, &y| band[x][k + kl - x].abs().total_cmp(&band[y][k + kl - y].abs()))
            .expect("non-empty range");
        if band[p][k + kl - p].abs() <= 1e-14 * scale {
            return Err(k / n);
        }
        let hi = (k + ku).min(size - 1);
        if p != k {
            for c in k..=hi {
                let (ik, ip) = (c + kl - k, c + kl - p);
                let tmp = band[k][ik];
                band[k][ik] = band[p][ip];
                band[p][ip] = tmp;
            }
            rhs.swap(k, p);
        }
        let pivot = band[k][kl];
        for r in k + 1..=last {
            let f = band[r][k + kl - r] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in k..=hi {
                band[r][c + kl - r] -= f * band[k][c + kl - k];
            }
            rhs[r] -= f * rhs[k];
        }
    }

    let mut x = vec![0.0; size];
    for k in (0..size).rev() {
        let hi = (k + ku).min(size - 1);
        let tail: f64 = (k + 1..=hi).map(|c| band[k][c + kl - k] * x[c]).sum();
        x[k] = (rhs[k] - tail) / band[k][kl];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(0);
    }
    Ok(x)
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |a, b| rows[a][b])
}
