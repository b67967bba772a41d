//! Invariance of the action under a transformation family, checked cell by
//! cell. Equality on every elementary cell `[t_i, σ(t_i)]` is equivalent to
//! equality on every subinterval `[t_a, t_b]` with grid endpoints.
//!
//! Cell discrepancies are scaled: `|new - old| / (1 + |old|)`.

use crate::timescale::{Intent, TimeScaleGrid};
use crate::variational::{action, cell_arguments, Problem, Trajectory};

use super::{check_dims, NoetherError, SymmetryGenerator};

/// Step for the central difference `d/dε I` at `ε = 0`.
pub const DERIVATIVE_STEP: f64 = 1e-5;
/// `|d/dε I| ≤ DERIVATIVE_TOLERANCE · (1 + |I|)` is accepted as zero.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvarianceMode {
    /// Only the state moves; integrands are compared on the same cell.
    FixedTime,
    /// Time and state move; cell integrals are compared against the image grid.
    TimeTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub eps: f64,
    /// One scaled discrepancy per cell (per point of `T^κ`).
    pub discrepancies: Vec<f64>,
    pub max: f64,
    pub worst_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub mode: InvarianceMode,
    pub cell_times: Vec<f64>,
    pub rows: Vec<EpsilonRow>,
    pub action: f64,
    pub d_action_d_eps: f64,
}

impl InvarianceReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.max).fold(0.0, f64::max)
    }

    pub fn derivative_vanishes(&self) -> bool {
        self.d_action_d_eps.abs() <= DERIVATIVE_TOLERANCE * (1.0 + self.action.abs())
    }

    pub fn is_invariant(&self, tol: f64) -> bool {
        self.max_discrepancy() <= tol && self.derivative_vanishes()
    }
}

fn row(eps: f64, old: &[f64], new: &[f64]) -> EpsilonRow {
    let discrepancies: Vec<f64> = old.iter().zip(new).map(|(a, b)| (b - a).abs() / (1.0 + a.abs())).collect();
    let (worst_cell, max) = discrepancies
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(k, m), (i, d)| if *d > m { (i, *d) } else { (k, m) });
    EpsilonRow { eps, discrepancies, max, worst_cell }
}

fn eval_err(what: &'static str, t: f64) -> impl FnOnce(crate::expr::EvalError) -> NoetherError {
    move |source| NoetherError::Eval { what, t, source }
}

/// Integrand `L(t_i, q^σ, q^Δ)` on every cell.
fn integrands(p: &Problem, q: &Trajectory) -> Result<Vec<f64>, NoetherError> {
    (0..q.len() - 1)
        .map(|i| {
            let (t, y, v) = cell_arguments(q, i);
            p.lagrangian().value(t, y, &v).map_err(eval_err("L", t))
        })
        .collect()
}

fn transformed_states(q: &Trajectory, gen: &SymmetryGenerator, eps: f64) -> Result<Vec<f64>, NoetherError> {
    let mut out = Vec::with_capacity(q.values().len());
    for (i, &t) in q.times().iter().enumerate() {
        out.extend(gen.transform_state(t, q.at(i), eps).map_err(eval_err("qbar", t))?);
    }
    Ok(out)
}

/// Invariance without transforming time: `q̄ = Q_ε(t, q)` on the same grid.
pub fn check_invariance_fixed_time(
    p: &Problem,
    q: &Trajectory,
    gen: &SymmetryGenerator,
    eps_list: &[f64],
) -> Result<InvarianceReport, NoetherError> {
    check_dims(p, gen)?;
    let base = integrands(p, q)?;
    let moved = |eps: f64| -> Result<Trajectory, NoetherError> { Ok(p.trajectory(transformed_states(q, gen, eps)?)?) };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        rows.push(row(eps, &base, &integrands(p, &moved(eps)?)?));
    }
    let plus = action(p, &moved(DERIVATIVE_STEP)?)?;
    let minus = action(p, &moved(-DERIVATIVE_STEP)?)?;
    Ok(InvarianceReport {
        mode: InvarianceMode::FixedTime,
        cell_times: q.grid().kappa_points().to_vec(),
        rows,
        action: action(p, q)?,
        d_action_d_eps: (plus - minus) / (2.0 * DERIVATIVE_STEP),
    })
}

/// Cell integrals `μ̄_i · L(t̄_i, q̄_{i+1}, (q̄_{i+1} - q̄_i)/μ̄_i)` over the
/// image grid `t̄_i = T_ε(t_i, q_i)`. Because the image grid is built point
/// for point, `σ̄(α(t)) = α(σ(t))` holds by construction.
fn image_cells(p: &Problem, q: &Trajectory, gen: &SymmetryGenerator, eps: f64) -> Result<Vec<f64>, NoetherError> {
    let mut times = Vec::with_capacity(q.len());
    for (i, &t) in q.times().iter().enumerate() {
        times.push(gen.transform_time(t, q.at(i), eps).map_err(eval_err("tbar", t))?);
    }
    if let Some(index) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(NoetherError::NonMonotone { eps, index: index + 1 });
    }
    let image = TimeScaleGrid::from_points(times, Intent::ExactDiscrete).map_err(|_| NoetherError::NonMonotone { eps, index: 0 })?;
    let states = transformed_states(q, gen, eps)?;
    let n = q.dim();
    (0..q.len() - 1)
        .map(|i| {
            let tb = image.point(i);
            let mu = image.mu_at(i);
            let y = &states[(i + 1) * n..(i + 2) * n];
            let v: Vec<f64> = (0..n).map(|k| (states[(i + 1) * n + k] - states[i * n + k]) / mu).collect();
            let l = p.lagrangian().value(tb, y, &v).map_err(eval_err("L", tb))?;
            Ok(mu * l)
        })
        .collect()
}

/// Invariance with time transformation: compares the action of `q` on each
/// original cell with the action of `q̄` on the corresponding image cell.
pub fn check_invariance_time_transform(
    p: &Problem,
    q: &Trajectory,
    gen: &SymmetryGenerator,
    eps_list: &[f64],
) -> Result<InvarianceReport, NoetherError> {
    check_dims(p, gen)?;
    let grid = q.grid();
    let base: Vec<f64> = integrands(p, q)?.iter().enumerate().map(|(i, l)| grid.mu_at(i) * l).collect();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        rows.push(row(eps, &base, &image_cells(p, q, gen, eps)?));
    }
    let plus: f64 = image_cells(p, q, gen, DERIVATIVE_STEP)?.iter().sum();
    let minus: f64 = image_cells(p, q, gen, -DERIVATIVE_STEP)?.iter().sum();
    Ok(InvarianceReport {
        mode: InvarianceMode::TimeTransform,
        cell_times: grid.kappa_points().to_vec(),
        rows,
        action: action(p, q)?,
        d_action_d_eps: (plus - minus) / (2.0 * DERIVATIVE_STEP),
    })
}
