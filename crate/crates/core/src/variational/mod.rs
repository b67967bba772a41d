//! The fundamental variational problem on a time scale:
//! minimize `I[q] = ∫_a^b L(t, q^σ(t), q^Δ(t)) Δt` with `q(a) = qa`, `q(b) = qb`.
//!
//! On a finite grid the action is the sum over cells `[t_i, t_{i+1}]` of
//! `μ_i · L(t_i, q_{i+1}, (q_{i+1} - q_i) / μ_i)`. The Euler–Lagrange residual
//! `Δ/Δt ∂₃L - ∂₂L` lives on `T^{κ²}`, the first `N - 2` points, which pair
//! one-to-one with the interior unknowns `q_1 … q_{N-2}`; the exact action
//! gradient satisfies `g_j = -μ_{j-1} · residual_{j-1}`.

mod lagrangian;
mod solver;

use std::sync::Arc;

use thiserror::Error;

use crate::calculus::{CalculusError, GridFunction};
use crate::expr::EvalError;
use crate::timescale::TimeScaleGrid;

pub use lagrangian::{Lagrangian, Partials, SecondPartials};
pub use solver::{solve_el, Solution, SolverOptions};

/// A trajectory is a vector-valued grid function `t_i ↦ q(t_i)`.
pub type Trajectory = GridFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("the grid needs at least 3 points, got {0}")]
    GridTooShort(usize),
    #[error("trajectory is not defined on the problem's grid")]
    ForeignGrid,
    #[error("evaluating the Lagrangian on cell {cell} (t = {t}): {source}")]
    Eval { cell: usize, t: f64, source: EvalError },
    #[error("Newton did not converge after {iterations} iterations (gradient max-norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian block at interior point {index} (t = {t}; gradient max-norm {residual:e})")]
    SingularJacobian { index: usize, t: f64, residual: f64 },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Grid, Lagrangian and boundary data.
#[derive(Debug, Clone)]
pub struct Problem {
    grid: Arc<TimeScaleGrid>,
    lagrangian: Lagrangian,
    qa: Vec<f64>,
    qb: Vec<f64>,
}

impl Problem {
    pub fn new(grid: Arc<TimeScaleGrid>, lagrangian: Lagrangian, qa: Vec<f64>, qb: Vec<f64>) -> Result<Self, VariationalError> {
        let n = lagrangian.dim();
        for (what, v) in [("qa", &qa), ("qb", &qb)] {
            if v.len() != n {
                return Err(VariationalError::Dimension { what, expected: n, got: v.len() });
            }
        }
        Ok(Self { grid, lagrangian, qa, qb })
    }

    pub fn grid(&self) -> &Arc<TimeScaleGrid> {
        &self.grid
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    pub fn qa(&self) -> &[f64] {
        &self.qa
    }

    pub fn qb(&self) -> &[f64] {
        &self.qb
    }

    /// Wraps raw row-major values as a trajectory on this problem's grid.
    pub fn trajectory(&self, values: Vec<f64>) -> Result<Trajectory, VariationalError> {
        Ok(GridFunction::new(self.grid.clone(), self.dim(), values)?)
    }

    /// Componentwise linear interpolation in `t` between `qa` and `qb`, with
    /// the endpoints set to the boundary data exactly.
    pub fn linear_guess(&self) -> Trajectory {
        let n = self.dim();
        let (a, b) = (self.grid.start(), self.grid.end());
        let last = self.grid.len() - 1;
        let mut values = Vec::with_capacity(self.grid.len() * n);
        for (i, &t) in self.grid.points().iter().enumerate() {
            let s = (t - a) / (b - a);
            for k in 0..n {
                values.push(match i {
                    0 => self.qa[k],
                    i if i == last => self.qb[k],
                    _ => self.qa[k] + s * (self.qb[k] - self.qa[k]),
                });
            }
        }
        GridFunction::new(self.grid.clone(), n, values).expect("finite boundary data")
    }

    fn check_trajectory(&self, q: &Trajectory) -> Result<(), VariationalError> {
        if q.dim() != self.dim() {
            return Err(VariationalError::Dimension { what: "trajectory", expected: self.dim(), got: q.dim() });
        }
        if !Arc::ptr_eq(q.grid(), &self.grid) && q.grid().points() != self.grid.points() {
            return Err(VariationalError::ForeignGrid);
        }
        Ok(())
    }

    fn require_three_points(&self) -> Result<(), VariationalError> {
        if self.grid.len() < 3 {
            return Err(VariationalError::GridTooShort(self.grid.len()));
        }
        Ok(())
    }
}

/// Arguments of `L` on cell `i`: `(t_i, q^σ(t_i), q^Δ(t_i))`.
pub fn cell_arguments(q: &Trajectory, i: usize) -> (f64, &[f64], Vec<f64>) {
    let grid = q.grid();
    let mu = grid.mu_at(i);
    let (cur, next) = (q.at(i), q.at(i + 1));
    let v = cur.iter().zip(next).map(|(a, b)| (b - a) / mu).collect();
    (grid.point(i), next, v)
}

/// Value and first partials of `L` on every cell, i.e. at every point of `T^κ`.
pub fn partials_along(p: &Problem, q: &Trajectory) -> Result<Vec<Partials>, VariationalError> {
    p.check_trajectory(q)?;
    (0..q.len() - 1)
        .map(|i| {
            let (t, y, v) = cell_arguments(q, i);
            p.lagrangian.partials(t, y, &v).map_err(|source| VariationalError::Eval { cell: i, t, source })
        })
        .collect()
}

/// `I[q] = Σ μ_i · L(t_i, q_{i+1}, (q_{i+1} - q_i)/μ_i)`.
pub fn action(p: &Problem, q: &Trajectory) -> Result<f64, VariationalError> {
    p.check_trajectory(q)?;
    let grid = q.grid();
    let mut total = 0.0;
    for i in 0..q.len() - 1 {
        let (t, y, v) = cell_arguments(q, i);
        let l = p.lagrangian.value(t, y, &v).map_err(|source| VariationalError::Eval { cell: i, t, source })?;
        total += grid.mu_at(i) * l;
    }
    Ok(total)
}

/// Euler–Lagrange residual `(P(t_{i+1}) - P(t_i))/μ_i - ∂₂L(t_i)` with
/// `P = ∂₃L`, on `T^{κ²}`.
pub fn el_residual(p: &Problem, q: &Trajectory) -> Result<GridFunction, VariationalError> {
    p.require_three_points()?;
    let parts = partials_along(p, q)?;
    Ok(residual_from_partials(q, &parts)?)
}

pub(crate) fn residual_from_partials(q: &Trajectory, parts: &[Partials]) -> Result<GridFunction, CalculusError> {
    let grid = q.grid();
    let n = q.dim();
    let mut values = Vec::with_capacity((parts.len() - 1) * n);
    for i in 0..parts.len() - 1 {
        let mu = grid.mu_at(i);
        for k in 0..n {
            values.push((parts[i + 1].dv[k] - parts[i].dv[k]) / mu - parts[i].dy[k]);
        }
    }
    let kk = Arc::new(grid.kappa()?.kappa()?);
    GridFunction::new(kk, n, values)
}

/// Exact gradient of [`action`] with respect to the interior values
/// `q_1 … q_{N-2}`, row-major (`n` entries per interior point).
///
/// Assembled cell by cell: cell `i` depends on `q_i` through `q^Δ` and on
/// `q_{i+1}` through both `q^σ` and `q^Δ`.
pub fn stationarity_gradient(p: &Problem, q: &Trajectory) -> Result<Vec<f64>, VariationalError> {
    p.require_three_points()?;
    let parts = partials_along(p, q)?;
    Ok(gradient_from_partials(q, &parts))
}

pub(crate) fn gradient_from_partials(q: &Trajectory, parts: &[Partials]) -> Vec<f64> {
    let grid = q.grid();
    let n = q.dim();
    let interior = q.len() - 2;
    let mut g = vec![0.0; interior * n];
    for (i, part) in parts.iter().enumerate() {
        let mu = grid.mu_at(i);
        // d(cell)/d(q_i) = -∂₃L
        if i >= 1 {
            let row = (i - 1) * n;
            for k in 0..n {
                g[row + k] -= part.dv[k];
            }
        }
        // d(cell)/d(q_{i+1}) = μ ∂₂L + ∂₃L
        if i < interior {
            let row = i * n;
            for k in 0..n {
                g[row + k] += mu * part.dy[k] + part.dv[k];
            }
        }
    }
    g
}
