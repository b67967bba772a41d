use crate::expr::{EvalError, Expr, Scope, Var};

use super::NoetherError;

/// Exact finite transformation maps `t̄ = tbar(t, q, eps)`, `q̄ = qbar(t, q, eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformFamily {
    pub tbar: Expr,
    pub qbar: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    dim: usize,
    tau: Expr,
    xi: Vec<Expr>,
    family: Option<TransformFamily>,
}

/// Largest deviations found by [`SymmetryGenerator::check_family`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyCheck {
    /// `max |tbar(t,q,0) - t|, |qbar(t,q,0) - q|`.
    pub identity_error: f64,
    /// `max |d/dε tbar - τ|, |d/dε qbar - ξ|` at ε = 0, by central differences.
    pub derivative_error: f64,
}

fn parse(field: &str, text: &str, scope: Scope) -> Result<Expr, NoetherError> {
    Expr::parse(text, scope).map_err(|source| NoetherError::Parse { field: field.to_string(), source })
}

fn lookup(t: f64, q: &[f64], eps: f64) -> impl Fn(Var) -> Option<f64> + '_ {
    move |v| match v {
        Var::T => Some(t),
        Var::Eps => Some(eps),
        Var::Q(k) => q.get(k).copied(),
        _ => None,
    }
}

impl SymmetryGenerator {
    /// First-order family from `τ(t, q)` and `ξ(t, q)`.
    pub fn parse(tau: &str, xi: &[&str], dim: usize) -> Result<Self, NoetherError> {
        if xi.len() != dim {
            return Err(NoetherError::Dimension { what: "xi", expected: dim, got: xi.len() });
        }
        let tau = parse("tau", tau, Scope::generator(dim))?;
        let xi = xi
            .iter()
            .enumerate()
            .map(|(k, s)| parse(&format!("xi[{k}]"), s, Scope::generator(dim)))
            .collect::<Result<_, _>>()?;
        Ok(Self { dim, tau, xi, family: None })
    }

    /// Attaches exact maps over `(t, q, eps)`.
    pub fn with_family(mut self, tbar: &str, qbar: &[&str]) -> Result<Self, NoetherError> {
        if qbar.len() != self.dim {
            return Err(NoetherError::Dimension { what: "qbar", expected: self.dim, got: qbar.len() });
        }
        let scope = Scope::family(self.dim);
        let tbar = parse("tbar", tbar, scope)?;
        let qbar = qbar
            .iter()
            .enumerate()
            .map(|(k, s)| parse(&format!("qbar[{k}]"), s, scope))
            .collect::<Result<_, _>>()?;
        self.family = Some(TransformFamily { tbar, qbar });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> Option<&TransformFamily> {
        self.family.as_ref()
    }

    /// True when `τ` is the literal `0` and no exact time map is given, i.e.
    /// the family never moves time.
    pub fn fixes_time(&self) -> bool {
        self.tau.is_zero_literal() && self.family.is_none()
    }

    pub fn tau(&self, t: f64, q: &[f64]) -> Result<f64, EvalError> {
        self.tau.eval_with(&lookup(t, q, 0.0))
    }

    pub fn xi(&self, t: f64, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        let env = lookup(t, q, 0.0);
        self.xi.iter().map(|e| e.eval_with(&env)).collect()
    }

    /// `T_ε(t, q)`: the exact map if present, else `t + ε τ`.
    pub fn transform_time(&self, t: f64, q: &[f64], eps: f64) -> Result<f64, EvalError> {
        match &self.family {
            Some(f) => f.tbar.eval_with(&lookup(t, q, eps)),
            None => Ok(t + eps * self.tau(t, q)?),
        }
    }

    /// `Q_ε(t, q)`: the exact map if present, else `q + ε ξ`.
    pub fn transform_state(&self, t: f64, q: &[f64], eps: f64) -> Result<Vec<f64>, EvalError> {
        match &self.family {
            Some(f) => {
                let env = lookup(t, q, eps);
                f.qbar.iter().map(|e| e.eval_with(&env)).collect()
            }
            None => Ok(q.iter().zip(self.xi(t, q)?).map(|(x, d)| x + eps * d).collect()),
        }
    }

    /// Checks the exact family against `(τ, ξ)` on sample arguments.
    pub fn check_family(&self, samples: &[(f64, Vec<f64>)]) -> Result<FamilyCheck, EvalError> {
        let h = 1e-6;
        let mut identity_error: f64 = 0.0;
        let mut derivative_error: f64 = 0.0;
        for (t, q) in samples {
            let (t, q) = (*t, q.as_slice());
            identity_error = identity_error.max((self.transform_time(t, q, 0.0)? - t).abs());
            for (a, b) in self.transform_state(t, q, 0.0)?.iter().zip(q) {
                identity_error = identity_error.max((a - b).abs());
            }
            let dt = (self.transform_time(t, q, h)? - self.transform_time(t, q, -h)?) / (2.0 * h);
            derivative_error = derivative_error.max((dt - self.tau(t, q)?).abs());
            let (qp, qm) = (self.transform_state(t, q, h)?, self.transform_state(t, q, -h)?);
            for ((a, b), xi) in qp.iter().zip(&qm).zip(self.xi(t, q)?) {
                derivative_error = derivative_error.max(((a - b) / (2.0 * h) - xi).abs());
            }
        }
        Ok(FamilyCheck { identity_error, derivative_error })
    }
}
