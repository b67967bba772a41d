//! Delta calculus on grids: delta derivative, σ-composition, the Cauchy delta
//! integral and the change-of-variables push-forward.
//!
//! Every non-final point of a finite grid is right-scattered, so the delta
//! derivative there is exactly the forward difference quotient and the delta
//! integral is exactly the left-endpoint sum weighted by graininess.

use std::sync::Arc;

use thiserror::Error;

use crate::timescale::{Intent, TimeScaleError, TimeScaleGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("expected {expected} values for {points} points of dimension {dim}, got {got}")]
    Length { points: usize, dim: usize, expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("value at point {point} (component {component}) is not finite")]
    NonFinite { point: usize, component: usize },
    #[error("integration bounds reversed: {r} > {s}")]
    ReversedBounds { r: f64, s: f64 },
    #[error("function values are not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("the function must be scalar, got dimension {0}")]
    NotScalar(usize),
    #[error(transparent)]
    TimeScale(#[from] TimeScaleError),
}

/// Values (scalars or `dim`-vectors) attached to the points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<TimeScaleGrid>,
    dim: usize,
    // row-major: point i occupies values[i*dim..(i+1)*dim]
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<TimeScaleGrid>, dim: usize, values: Vec<f64>) -> Result<Self, CalculusError> {
        if dim == 0 {
            return Err(CalculusError::ZeroDimension);
        }
        let expected = grid.len() * dim;
        if values.len() != expected {
            return Err(CalculusError::Length { points: grid.len(), dim, expected, got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(CalculusError::NonFinite { point: k / dim, component: k % dim });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn scalar(grid: Arc<TimeScaleGrid>, values: Vec<f64>) -> Result<Self, CalculusError> {
        Self::new(grid, 1, values)
    }

    /// Samples a scalar function of time at every grid point.
    pub fn from_fn(grid: Arc<TimeScaleGrid>, f: impl Fn(f64) -> f64) -> Result<Self, CalculusError> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::scalar(grid, values)
    }

    pub fn grid(&self) -> &Arc<TimeScaleGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at point `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `k` at every point.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    fn on_kappa(&self, values: Vec<f64>) -> Result<Self, CalculusError> {
        let kappa = Arc::new(self.grid.kappa()?);
        Ok(Self { grid: kappa, dim: self.dim, values })
    }
}

/// `f^Δ` on `T^κ`: `(f(σ(t)) - f(t)) / μ(t)`.
pub fn delta_derivative(f: &GridFunction) -> Result<GridFunction, CalculusError> {
    let n = f.dim;
    let grid = &f.grid;
    let mut out = Vec::with_capacity((f.len() - 1) * n);
    for i in 0..f.len() - 1 {
        let mu = grid.mu_at(i);
        let (cur, next) = (f.at(i), f.at(i + 1));
        out.extend(cur.iter().zip(next).map(|(a, b)| (b - a) / mu));
    }
    f.on_kappa(out)
}

/// `f^σ = f ∘ σ` on `T^κ`.
pub fn compose_sigma(f: &GridFunction) -> Result<GridFunction, CalculusError> {
    f.on_kappa(f.values[f.dim..].to_vec())
}

/// Cauchy delta integral `∫_r^s f(t) Δt = Σ μ(t_i) f(t_i)` over `t_i ∈ [r, s)`,
/// componentwise.
pub fn delta_integral(f: &GridFunction, r: f64, s: f64) -> Result<Vec<f64>, CalculusError> {
    if r > s {
        return Err(CalculusError::ReversedBounds { r, s });
    }
    let i0 = f.grid.index_of(r)?;
    let i1 = f.grid.index_of(s)?;
    let mut acc = vec![0.0; f.dim];
    for i in i0..i1 {
        let mu = f.grid.mu_at(i);
        for (a, v) in acc.iter_mut().zip(f.at(i)) {
            *a += mu * v;
        }
    }
    Ok(acc)
}

/// The partial-sum antiderivative `F(t) = ∫_a^t f Δt`, which satisfies
/// `F^Δ = f` on `T^κ`.
pub fn antiderivative(f: &GridFunction) -> GridFunction {
    let n = f.dim;
    let mut out = Vec::with_capacity(f.values.len());
    let mut acc = vec![0.0; n];
    out.extend_from_slice(&acc);
    for i in 0..f.len() - 1 {
        let mu = f.grid.mu_at(i);
        for (a, v) in acc.iter_mut().zip(f.at(i)) {
            *a += mu * v;
        }
        out.extend_from_slice(&acc);
    }
    GridFunction { grid: f.grid.clone(), dim: n, values: out }
}

/// Result of transporting a function along a strictly increasing time map.
#[derive(Debug, Clone)]
pub struct Pushforward {
    /// The image time scale `{α(t_i)}`.
    pub image: Arc<TimeScaleGrid>,
    /// `f` sampled on the image grid.
    pub transported: GridFunction,
    /// `∫_a^b f(α(t)) α^Δ(t) Δt` over the original grid.
    pub lhs: f64,
    /// `∫_{α(a)}^{α(b)} f(s) Δs` over the image grid.
    pub rhs: f64,
}

impl Pushforward {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Change of variables along an increasing `α`: evaluates both sides of
/// `∫ f(α(t)) α^Δ(t) Δt = ∫ f(s) Δs`, the right side over the image grid.
pub fn pushforward(alpha: &GridFunction, f: impl Fn(f64) -> f64) -> Result<Pushforward, CalculusError> {
    if alpha.dim != 1 {
        return Err(CalculusError::NotScalar(alpha.dim));
    }
    if let Some(i) = alpha.values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(CalculusError::NotIncreasing(i + 1));
    }
    let image = Arc::new(TimeScaleGrid::from_points(alpha.values.clone(), Intent::ExactDiscrete)?);
    let transported = GridFunction::from_fn(image.clone(), &f)?;

    let alpha_delta = delta_derivative(alpha)?;
    let grid = &alpha.grid;
    let lhs = (0..grid.len() - 1)
        .map(|i| grid.mu_at(i) * f(alpha.values[i]) * alpha_delta.values[i])
        .sum();
    let rhs = delta_integral(&transported, image.start(), image.end())?[0];
    Ok(Pushforward { image, transported, lhs, rhs })
}
