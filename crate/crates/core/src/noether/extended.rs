//! The extended Lagrangian `L̃(t; s, q; r, v) = L(s - μ(t) r, q, v / r) · r`,
//! which treats time `s` as an extra state. Along `s(t) = t` (so `s^σ = σ(t)`
//! and `r = s^Δ = 1`) its partials satisfy
//!
//! * `∂L̃/∂v = ∂₃L(t, q^σ, q^Δ)`
//! * `∂L̃/∂r = L - ∂₃L · q^Δ - ∂₁L · μ(t)`
//!
//! and `L̃` itself reproduces `L(t, q^σ, q^Δ)`.

use crate::expr::Dual;
use crate::variational::{cell_arguments, partials_along, Lagrangian, Problem, Trajectory};

use super::NoetherError;

const FD_STEP: f64 = 1e-6;

/// `L̃` and its partials in `r` and `v`, by forward-mode differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPartials {
    pub value: f64,
    pub d_r: f64,
    pub d_v: Vec<f64>,
}

/// Evaluates `L̃(t; s, y; r, v)` with graininess `mu = μ(t)`.
pub fn extended_lagrangian_at(
    l: &Lagrangian,
    mu: f64,
    s: f64,
    y: &[f64],
    r: f64,
    v: &[f64],
) -> Result<ExtendedPartials, NoetherError> {
    if r == 0.0 {
        return Err(NoetherError::ZeroTimeRate);
    }
    let eval = |r_dir: f64, v_dir: Option<usize>| -> Result<Dual<f64>, NoetherError> {
        let rr = Dual::new(r, r_dir);
        let time = Dual::constant(s) - Dual::constant(mu) * rr;
        let ys: Vec<Dual<f64>> = y.iter().map(|&x| Dual::constant(x)).collect();
        let vs: Vec<Dual<f64>> = v
            .iter()
            .enumerate()
            .map(|(k, &x)| Dual::new(x, if v_dir == Some(k) { 1.0 } else { 0.0 }) / rr)
            .collect();
        let out = l
            .eval_generic(time, &ys, &vs)
            .map_err(|source| NoetherError::Eval { what: "extended Lagrangian", t: s, source })?;
        Ok(out * rr)
    };
    let along_r = eval(1.0, None)?;
    let d_v = (0..v.len()).map(|k| eval(0.0, Some(k)).map(|d| d.eps)).collect::<Result<_, _>>()?;
    Ok(ExtendedPartials { value: along_r.re, d_r: along_r.eps, d_v })
}

/// One point of `T^κ` in an [`ExtendedReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPoint {
    pub t: f64,
    pub lagrangian: f64,
    pub extended: f64,
    pub d_r: f64,
    pub d_r_formula: f64,
    pub d_r_fd: f64,
    pub d_v: Vec<f64>,
    pub d_v_formula: Vec<f64>,
    pub d_v_fd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedReport {
    pub points: Vec<ExtendedPoint>,
    /// Max scaled gap between `L̃` and `L`.
    pub value_error: f64,
    /// Max scaled gap between forward-mode partials and the closed forms.
    pub formula_error: f64,
    /// Max scaled gap between forward-mode partials and central differences.
    pub fd_error: f64,
}

fn gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Checks the extended-Lagrangian identities along `s(t) = t` on `T^κ`.
pub fn extended_lagrangian_partials(p: &Problem, q: &Trajectory) -> Result<ExtendedReport, NoetherError> {
    let parts = partials_along(p, q)?;
    let grid = q.grid();
    let l = p.lagrangian();
    let mut points = Vec::with_capacity(parts.len());
    let (mut value_error, mut formula_error, mut fd_error) = (0.0f64, 0.0f64, 0.0f64);
    for (i, part) in parts.iter().enumerate() {
        let (t, y, v) = cell_arguments(q, i);
        let mu = grid.mu_at(i);
        let s_sigma = grid.sigma_at(i);
        let r = (s_sigma - t) / mu;
        let ext = extended_lagrangian_at(l, mu, s_sigma, y, r, &v)?;

        let v_dot: f64 = part.dv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let d_r_formula = part.value - v_dot - part.dt * mu;

        let value_at = |r: f64, v: &[f64]| extended_lagrangian_at(l, mu, s_sigma, y, r, v).map(|e| e.value);
        let d_r_fd = (value_at(r + FD_STEP, &v)? - value_at(r - FD_STEP, &v)?) / (2.0 * FD_STEP);
        let mut d_v_fd = Vec::with_capacity(v.len());
        for k in 0..v.len() {
            let (mut vp, mut vm) = (v.clone(), v.clone());
            vp[k] += FD_STEP;
            vm[k] -= FD_STEP;
            d_v_fd.push((value_at(r, &vp)? - value_at(r, &vm)?) / (2.0 * FD_STEP));
        }

        value_error = value_error.max(gap(ext.value, part.value));
        formula_error = formula_error.max(gap(ext.d_r, d_r_formula));
        fd_error = fd_error.max(gap(ext.d_r, d_r_fd));
        for k in 0..v.len() {
            formula_error = formula_error.max(gap(ext.d_v[k], part.dv[k]));
            fd_error = fd_error.max(gap(ext.d_v[k], d_v_fd[k]));
        }
        points.push(ExtendedPoint {
            t,
            lagrangian: part.value,
            extended: ext.value,
            d_r: ext.d_r,
            d_r_formula,
            d_r_fd,
            d_v: ext.d_v,
            d_v_formula: part.dv.clone(),
            d_v_fd,
        });
    }
    Ok(ExtendedReport { points, value_error, formula_error, fd_error })
}
