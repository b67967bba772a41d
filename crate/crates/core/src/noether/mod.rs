//! Variational symmetries and Noether conserved quantities.
//!
//! A symmetry generator is the pair `(τ, ξ)` of a one-parameter family
//! `t̄ = t + ε τ(t, q) + o(ε)`, `q̄ = q + ε ξ(t, q) + o(ε)`, optionally with
//! exact finite maps `tbar(t, q, eps)`, `qbar(t, q, eps)`. Without them the
//! `o(ε)` terms are taken to be identically zero.
//!
//! Conservation is measured, not assumed: every [`ConservationReport`]
//! carries `ΔC/Δt` obtained by forward-differencing the sampled `C` values.

mod extended;
mod generator;
mod invariance;

use thiserror::Error;

use crate::calculus::{compose_sigma, delta_derivative, CalculusError, GridFunction};
use crate::expr::{EvalError, ParseError};
use crate::variational::{cell_arguments, partials_along, residual_from_partials, Problem, Trajectory, VariationalError};

pub use extended::{extended_lagrangian_at, extended_lagrangian_partials, ExtendedPartials, ExtendedPoint, ExtendedReport};
pub use generator::{FamilyCheck, SymmetryGenerator, TransformFamily};
pub use invariance::{
    check_invariance_fixed_time, check_invariance_time_transform, EpsilonRow, InvarianceMode, InvarianceReport,
    DERIVATIVE_STEP, DERIVATIVE_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoetherError {
    #[error("{field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("evaluating {what} at t = {t}: {source}")]
    Eval { what: &'static str, t: f64, source: EvalError },
    #[error("transformed time grid is not strictly increasing for eps = {eps} (index {index})")]
    NonMonotone { eps: f64, index: usize },
    #[error("extended Lagrangian needs r != 0")]
    ZeroTimeRate,
    #[error("a conservation residual needs at least 2 values of C, got {0}")]
    TooFewValues(usize),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Which graininess enters the `∂₁L · μ` term of the conserved quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Graininess {
    /// `μ` of the grid.
    #[default]
    Grid,
    /// `μ ≡ 0`: the continuum formula, evaluated on grid data.
    Zero,
}

/// `C` sampled on `T^κ` and its delta derivative on `T^{κ²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub residual_times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_abs: f64,
}

impl ConservationReport {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, NoetherError> {
        let summary = conservation_residual(&times, &values)?;
        Ok(Self {
            times,
            values,
            residual_times: summary.times,
            residuals: summary.residuals,
            max_abs: summary.max_abs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationSummary {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub argmax: usize,
}

/// `ΔC/Δt(t_i) = (C(t_{i+1}) - C(t_i)) / (t_{i+1} - t_i)`, from samples only.
pub fn conservation_residual(times: &[f64], values: &[f64]) -> Result<ConservationSummary, NoetherError> {
    if values.len() < 2 || times.len() != values.len() {
        return Err(NoetherError::TooFewValues(values.len().min(times.len())));
    }
    let residuals: Vec<f64> = (0..values.len() - 1)
        .map(|i| (values[i + 1] - values[i]) / (times[i + 1] - times[i]))
        .collect();
    let (argmax, max_abs) = residuals
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(k, m), (i, r)| if r.abs() > m { (i, r.abs()) } else { (k, m) });
    Ok(ConservationSummary { times: times[..values.len() - 1].to_vec(), residuals, max_abs, argmax })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ξ(t_i, q(t_i))` at every grid point, as a grid function.
fn sampled_xi(q: &Trajectory, gen: &SymmetryGenerator) -> Result<GridFunction, NoetherError> {
    let mut values = Vec::with_capacity(q.values().len());
    for (i, &t) in q.times().iter().enumerate() {
        values.extend(gen.xi(t, q.at(i)).map_err(|source| NoetherError::Eval { what: "xi", t, source })?);
    }
    Ok(GridFunction::new(q.grid().clone(), q.dim(), values)?)
}

fn check_dims(p: &Problem, gen: &SymmetryGenerator) -> Result<(), NoetherError> {
    if gen.dim() != p.dim() {
        return Err(NoetherError::Dimension { what: "symmetry generator", expected: p.dim(), got: gen.dim() });
    }
    Ok(())
}

/// Necessary condition of invariance, pointwise on `T^κ`:
/// `∂₂L · ξ^σ + ∂₃L · ξ^Δ` with `ξ^σ`, `ξ^Δ` taken from the sampled
/// function `t ↦ ξ(t, q(t))`.
pub fn invariance_residual_pointwise(p: &Problem, q: &Trajectory, gen: &SymmetryGenerator) -> Result<GridFunction, NoetherError> {
    check_dims(p, gen)?;
    let parts = partials_along(p, q)?;
    let xi = sampled_xi(q, gen)?;
    let xi_sigma = compose_sigma(&xi)?;
    let xi_delta = delta_derivative(&xi)?;
    let values = parts
        .iter()
        .enumerate()
        .map(|(i, part)| dot(&part.dy, xi_sigma.at(i)) + dot(&part.dv, xi_delta.at(i)))
        .collect();
    Ok(GridFunction::scalar(xi_sigma.grid().clone(), values)?)
}

/// `C = ∂₃L(t, q^σ, q^Δ) · ξ(t, q)` on `T^κ`.
pub fn noether_quantity_fixed_time(p: &Problem, q: &Trajectory, gen: &SymmetryGenerator) -> Result<ConservationReport, NoetherError> {
    check_dims(p, gen)?;
    let parts = partials_along(p, q)?;
    let xi = sampled_xi(q, gen)?;
    let values = parts.iter().enumerate().map(|(i, part)| dot(&part.dv, xi.at(i))).collect();
    ConservationReport::new(q.grid().kappa_points().to_vec(), values)
}

/// `C = ∂₃L · ξ + [L - ∂₃L · q^Δ - ∂₁L · μ] · τ` on `T^κ`, all `L`-arguments
/// at `(t, q^σ, q^Δ)` and `τ`, `ξ` at `(t, q)`.
pub fn noether_quantity(
    p: &Problem,
    q: &Trajectory,
    gen: &SymmetryGenerator,
    graininess: Graininess,
) -> Result<ConservationReport, NoetherError> {
    check_dims(p, gen)?;
    let parts = partials_along(p, q)?;
    let xi = sampled_xi(q, gen)?;
    let grid = q.grid();
    let mut values = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let t = grid.point(i);
        let tau = gen.tau(t, q.at(i)).map_err(|source| NoetherError::Eval { what: "tau", t, source })?;
        let mut c = dot(&part.dv, xi.at(i));
        if tau != 0.0 {
            let (_, _, v) = cell_arguments(q, i);
            let mu = match graininess {
                Graininess::Grid => grid.mu_at(i),
                Graininess::Zero => 0.0,
            };
            c += (part.value - dot(&part.dv, &v) - part.dt * mu) * tau;
        }
        values.push(c);
    }
    ConservationReport::new(grid.kappa_points().to_vec(), values)
}

/// Terms of the exact product rule for the fixed-time quantity, on `T^{κ²}`:
/// `ΔC/Δt = EL(t) · ξ^σ(t) + r(t)` where `EL` is the Euler–Lagrange residual
/// and `r` the pointwise invariance residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductRuleLedger {
    pub times: Vec<f64>,
    pub conservation: Vec<f64>,
    pub el_term: Vec<f64>,
    pub invariance: Vec<f64>,
}

impl ProductRuleLedger {
    /// Largest `|ΔC/Δt - EL·ξ^σ - r|`, scaled by `max(1, |terms|)`.
    pub fn max_mismatch(&self) -> f64 {
        (0..self.times.len())
            .map(|i| {
                let (c, e, r) = (self.conservation[i], self.el_term[i], self.invariance[i]);
                (c - e - r).abs() / c.abs().max(e.abs()).max(r.abs()).max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

pub fn product_rule_ledger(p: &Problem, q: &Trajectory, gen: &SymmetryGenerator) -> Result<ProductRuleLedger, NoetherError> {
    let report = noether_quantity_fixed_time(p, q, gen)?;
    let parts = partials_along(p, q)?;
    let el = residual_from_partials(q, &parts)?;
    let xi = sampled_xi(q, gen)?;
    let inv = invariance_residual_pointwise(p, q, gen)?;
    let m = report.residuals.len();
    Ok(ProductRuleLedger {
        times: report.residual_times.clone(),
        conservation: report.residuals,
        el_term: (0..m).map(|i| dot(el.at(i), xi.at(i + 1))).collect(),
        invariance: inv.values()[..m].to_vec(),
    })
}
