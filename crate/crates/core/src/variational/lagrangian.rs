use crate::expr::{Dual, EvalError, Expr, ParseError, Real, Scope, Var};

/// `L(t, y, v)` with `y ≙ q^σ` and `v ≙ q^Δ`, given as an expression over
/// `t`, `qs1..qsn` and `qd1..qdn`. The time argument may be any real number,
/// not only a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    dim: usize,
    expr: Expr,
}

/// `L` and its partials `∂₁L` (time), `∂₂L` (state), `∂₃L` (velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub dt: f64,
    pub dy: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Second partials in `(y, v)`; `yv[a][b] = ∂²L/∂y_a∂v_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondPartials {
    pub yy: Vec<Vec<f64>>,
    pub yv: Vec<Vec<f64>>,
    pub vv: Vec<Vec<f64>>,
}

impl Lagrangian {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        Ok(Self { dim, expr: Expr::parse(text, Scope::lagrangian(dim))? })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluates `L` with arguments in any [`Real`] type.
    pub fn eval_generic<T: Real>(&self, t: T, y: &[T], v: &[T]) -> Result<T, EvalError> {
        self.expr.eval_with(&|var| match var {
            Var::T => Some(t),
            Var::Qs(k) => y.get(k).copied(),
            Var::Qd(k) => v.get(k).copied(),
            _ => None,
        })
    }

    pub fn value(&self, t: f64, y: &[f64], v: &[f64]) -> Result<f64, EvalError> {
        self.eval_generic(t, y, v)
    }

    /// One forward-mode pass per argument direction.
    pub fn partials(&self, t: f64, y: &[f64], v: &[f64]) -> Result<Partials, EvalError> {
        let n = self.dim;
        let lift = |xs: &[f64], hot: Option<usize>| -> Vec<Dual<f64>> {
            xs.iter().enumerate().map(|(k, &x)| Dual::new(x, if hot == Some(k) { 1.0 } else { 0.0 })).collect()
        };
        let (y0, v0) = (lift(y, None), lift(v, None));
        let d = self.eval_generic(Dual::new(t, 1.0), &y0, &v0)?;
        let mut dy = Vec::with_capacity(n);
        let mut dv = Vec::with_capacity(n);
        for k in 0..n {
            dy.push(self.eval_generic(Dual::constant(t), &lift(y, Some(k)), &v0)?.eps);
        }
        for k in 0..n {
            dv.push(self.eval_generic(Dual::constant(t), &y0, &lift(v, Some(k)))?.eps);
        }
        Ok(Partials { value: d.re, dt: d.eps, dy, dv })
    }

    /// Hessian in `(y, v)` by nested dual evaluation.
    pub fn second_partials(&self, t: f64, y: &[f64], v: &[f64]) -> Result<SecondPartials, EvalError> {
        let n = self.dim;
        let m = 2 * n;
        let z: Vec<f64> = y.iter().chain(v).copied().collect();
        let mut h = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let args: Vec<Dual<Dual<f64>>> = z
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        let inner = Dual::new(x, if k == j { 1.0 } else { 0.0 });
                        let outer_tangent = Dual::constant(if k == i { 1.0 } else { 0.0 });
                        Dual::new(inner, outer_tangent)
                    })
                    .collect();
                let out = self.eval_generic(Dual::cst(t), &args[..n], &args[n..])?;
                h[i][j] = out.eps.eps;
                h[j][i] = out.eps.eps;
            }
        }
        let block = |r0: usize, c0: usize| -> Vec<Vec<f64>> {
            (0..n).map(|a| (0..n).map(|b| h[r0 + a][c0 + b]).collect()).collect()
        };
        Ok(SecondPartials { yy: block(0, 0), yv: block(0, n), vv: block(n, n) })
    }
}
