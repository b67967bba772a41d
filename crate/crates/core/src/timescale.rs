//! Finite time scales.
//!
//! A [`TimeScaleGrid`] is a strictly increasing list of time points standing
//! in for a time scale restricted to a compact window `[a, b]`. The jump
//! operators follow the usual conventions at the extremes: the forward jump
//! of the last point is the point itself, and likewise for the backward jump
//! of the first point.
//!
//! Grid membership is exact: a time is "in the grid" only if it compares
//! equal to a stored point. Callers that hold an index should use the
//! `*_at` accessors instead.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeScaleError {
    #[error("a time scale needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("points must be strictly increasing (index {index}: {prev} then {next})")]
    NonMonotone { index: usize, prev: f64, next: f64 },
    #[error("time points must be finite (index {0})")]
    NonFinite(usize),
    #[error("step h must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("{0} is not a point of the time scale")]
    NotInGrid(f64),
    #[error("truncation would leave an empty time scale")]
    EmptyTruncation,
}

/// What a grid is meant to model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intent {
    /// The grid *is* the time scale (`Z`, `hZ`, `{2^n}`, explicit lists).
    ExactDiscrete,
    /// The grid samples an interval of the real line with nominal step `h`.
    SampledContinuum { h: f64 },
}

/// Constructor descriptor for [`TimeScaleGrid::new`].
#[derive(Debug, Clone, PartialEq)]
pub enum TimeScaleSpec {
    /// `Z ∩ [a, b]`.
    Integers { a: i64, b: i64 },
    /// `hZ ∩ [a, b]`: the points `k·h` with `a ≤ k·h ≤ b`.
    Uniform { a: f64, b: f64, h: f64 },
    /// `{2^n : n0 ≤ n ≤ n1}`.
    Power2 { n0: i32, n1: i32 },
    Explicit(Vec<f64>),
    /// `a, a+h, a+2h, …, b`: samples an interval; the last step is clipped so
    /// that `b` is always a point.
    Sampled { a: f64, b: f64, h: f64 },
}

/// Flags describing a point of the grid, read off the literal grid structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointClass {
    pub right_scattered: bool,
    pub right_dense: bool,
    pub left_scattered: bool,
    pub left_dense: bool,
    pub isolated: bool,
    pub dense: bool,
    pub intent: Intent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaleGrid {
    points: Vec<f64>,
    intent: Intent,
}

// Relative slack used when deciding whether a ratio like (b-a)/h is integral.
const STEP_SLACK: f64 = 1e-9;

impl TimeScaleGrid {
    /// Builds a grid from a constructor descriptor.
    pub fn new(spec: &TimeScaleSpec) -> Result<Self, TimeScaleError> {
        match spec {
            TimeScaleSpec::Integers { a, b } => {
                let points = if a <= b { (*a..=*b).map(|k| k as f64).collect() } else { Vec::new() };
                Self::from_points(points, Intent::ExactDiscrete)
            }
            TimeScaleSpec::Uniform { a, b, h } => {
                check_step(*h)?;
                let kmin = (a / h - STEP_SLACK).ceil() as i64;
                let kmax = (b / h + STEP_SLACK).floor() as i64;
                let points = if kmin <= kmax {
                    (kmin..=kmax).map(|k| k as f64 * h).collect()
                } else {
                    Vec::new()
                };
                Self::from_points(points, Intent::ExactDiscrete)
            }
            TimeScaleSpec::Power2 { n0, n1 } => {
                let points = if n0 <= n1 { (*n0..=*n1).map(|n| 2f64.powi(n)).collect() } else { Vec::new() };
                Self::from_points(points, Intent::ExactDiscrete)
            }
            TimeScaleSpec::Explicit(points) => Self::from_points(points.clone(), Intent::ExactDiscrete),
            TimeScaleSpec::Sampled { a, b, h } => {
                check_step(*h)?;
                if !(a.is_finite() && b.is_finite()) || b <= a {
                    return Err(TimeScaleError::TooFewPoints(if a == b { 1 } else { 0 }));
                }
                let ratio = (b - a) / h;
                let nearest = ratio.round();
                // number of full steps strictly before b
                let steps = if (ratio - nearest).abs() <= STEP_SLACK * ratio.max(1.0) {
                    nearest as usize
                } else {
                    ratio.ceil() as usize
                };
                let mut points: Vec<f64> = (0..steps).map(|k| a + k as f64 * h).collect();
                points.push(*b);
                Self::from_points(points, Intent::SampledContinuum { h: *h })
            }
        }
    }

    pub fn from_points(points: Vec<f64>, intent: Intent) -> Result<Self, TimeScaleError> {
        if points.len() < 2 {
            return Err(TimeScaleError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return Err(TimeScaleError::NonFinite(i));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(TimeScaleError::NonMonotone { index: i + 1, prev: w[0], next: w[1] });
            }
        }
        Ok(Self { points, intent })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn intent(&self) -> Intent {
        self.intent
    }

    /// `a`, the minimum of the grid.
    pub fn start(&self) -> f64 {
        self.points[0]
    }

    /// `b`, the maximum of the grid.
    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of a stored point (exact comparison).
    pub fn index_of(&self, t: f64) -> Result<usize, TimeScaleError> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
            .map_err(|_| TimeScaleError::NotInGrid(t))
    }

    pub fn sigma_at(&self, i: usize) -> f64 {
        self.points[(i + 1).min(self.points.len() - 1)]
    }

    pub fn rho_at(&self, i: usize) -> f64 {
        self.points[i.saturating_sub(1)]
    }

    /// Graininess at index `i`; zero at the last point.
    pub fn mu_at(&self, i: usize) -> f64 {
        self.sigma_at(i) - self.points[i]
    }

    /// Forward jump operator.
    pub fn sigma(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(self.sigma_at(self.index_of(t)?))
    }

    /// Backward jump operator.
    pub fn rho(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(self.rho_at(self.index_of(t)?))
    }

    /// Graininess `σ(t) - t`.
    pub fn mu(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(self.mu_at(self.index_of(t)?))
    }

    /// Graininess at every non-final point, i.e. on `T^κ`.
    pub fn graininess(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `T^κ`: the grid without its maximum. A finite grid's maximum is always
    /// left-scattered, so it is always removed. The result may be a single
    /// point; truncating that again is an error.
    pub fn kappa(&self) -> Result<Self, TimeScaleError> {
        if self.points.len() < 2 {
            return Err(TimeScaleError::EmptyTruncation);
        }
        Ok(Self { points: self.points[..self.points.len() - 1].to_vec(), intent: self.intent })
    }

    /// Points of `T^κ` as a slice (may have a single point).
    pub fn kappa_points(&self) -> &[f64] {
        &self.points[..self.points.len() - 1]
    }

    pub fn classify(&self, t: f64) -> Result<PointClass, TimeScaleError> {
        let i = self.index_of(t)?;
        let right_scattered = self.sigma_at(i) > t;
        let left_scattered = self.rho_at(i) < t;
        Ok(PointClass {
            right_scattered,
            right_dense: !right_scattered,
            left_scattered,
            left_dense: !left_scattered,
            isolated: left_scattered && right_scattered,
            dense: !left_scattered && !right_scattered,
            intent: self.intent,
        })
    }
}

fn check_step(h: f64) -> Result<(), TimeScaleError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(TimeScaleError::NonPositiveStep(h))
    }
}
