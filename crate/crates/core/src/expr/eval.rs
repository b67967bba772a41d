use std::collections::BTreeMap;
use std::fmt;

use super::dual::{Dual, Real};
use super::{BinOp, Expr, Func, Node, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    Unbound(Var),
    UnknownVariable(String),
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    /// sqrt at 0 with a nonzero tangent; the derivative is infinite.
    SqrtSingular,
    ZeroToNegativePower,
    NonPositiveBase,
    NonFinite,
}

/// Evaluation failure, carrying the rendered offending node.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub node: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            EvalErrorKind::Unbound(v) => return write!(f, "variable '{v}' is not bound"),
            EvalErrorKind::UnknownVariable(s) => return write!(f, "unknown variable '{s}'"),
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::LogOfNonPositive => "logarithm of a non-positive number",
            EvalErrorKind::SqrtOfNegative => "square root of a negative number",
            EvalErrorKind::SqrtSingular => "derivative of sqrt at 0",
            EvalErrorKind::ZeroToNegativePower => "zero raised to a negative power",
            EvalErrorKind::NonPositiveBase => "non-integer power of a non-positive base",
            EvalErrorKind::NonFinite => "non-finite result",
        };
        write!(f, "{what} in '{}'", self.node)
    }
}

impl std::error::Error for EvalError {}

/// Values bound to variables by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalEnv {
    values: BTreeMap<Var, f64>,
}

impl EvalEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: Var, value: f64) -> &mut Self {
        self.values.insert(var, value);
        self
    }

    /// Binds a variable given by name, e.g. `"qd1"`.
    pub fn bind(mut self, name: &str, value: f64) -> Result<Self, EvalError> {
        let var = Var::from_name(name).filter(|v| v.index() != Some(usize::MAX)).ok_or_else(|| EvalError {
            kind: EvalErrorKind::UnknownVariable(name.to_string()),
            node: name.to_string(),
        })?;
        self.values.insert(var, value);
        Ok(self)
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values.get(&var).copied()
    }
}

/// Tangent direction for [`Expr::diff_eval`]; unlisted variables get zero.
pub type Seed = EvalEnv;

fn fail<T>(kind: EvalErrorKind, node: &Node) -> Result<T, EvalError> {
    Err(EvalError { kind, node: node.to_string() })
}

fn check<T: Real>(x: T, node: &Node) -> Result<T, EvalError> {
    if x.primal().is_finite() {
        Ok(x)
    } else {
        fail(EvalErrorKind::NonFinite, node)
    }
}

fn as_integer(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() <= 1e9).then_some(x as i64)
}

fn eval_node<T: Real>(node: &Node, lookup: &dyn Fn(Var) -> Option<T>) -> Result<T, EvalError> {
    let value = match node {
        Node::Num(x) => T::cst(*x),
        Node::Var(v) => match lookup(*v) {
            Some(x) => x,
            None => return fail(EvalErrorKind::Unbound(*v), node),
        },
        Node::Neg(a) => -eval_node(a, lookup)?,
        Node::Binary(op, a, b) => {
            let x = eval_node(a, lookup)?;
            let y = eval_node(b, lookup)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.primal() == 0.0 {
                        return fail(EvalErrorKind::DivisionByZero, node);
                    }
                    x / y
                }
                BinOp::Pow => power(x, y, node)?,
            }
        }
        Node::Call(func, a) => {
            let x = eval_node(a, lookup)?;
            let p = x.primal();
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Ln => {
                    if p <= 0.0 {
                        return fail(EvalErrorKind::LogOfNonPositive, node);
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if p < 0.0 {
                        return fail(EvalErrorKind::SqrtOfNegative, node);
                    }
                    if p == 0.0 && !x.is_constant() {
                        return fail(EvalErrorKind::SqrtSingular, node);
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
            }
        }
    };
    check(value, node)
}

fn power<T: Real>(base: T, exponent: T, node: &Node) -> Result<T, EvalError> {
    let b = base.primal();
    if exponent.is_constant() {
        if let Some(k) = as_integer(exponent.primal()) {
            if b == 0.0 && k < 0 {
                return fail(EvalErrorKind::ZeroToNegativePower, node);
            }
            return Ok(base.powi(k));
        }
        if b <= 0.0 {
            return fail(EvalErrorKind::NonPositiveBase, node);
        }
        return Ok(base.powf(exponent.primal()));
    }
    if b <= 0.0 {
        return fail(EvalErrorKind::NonPositiveBase, node);
    }
    Ok((exponent * base.ln()).exp())
}

impl Expr {
    /// Evaluates in any [`Real`] type, with variables supplied by `lookup`.
    pub fn eval_with<T: Real>(&self, lookup: &dyn Fn(Var) -> Option<T>) -> Result<T, EvalError> {
        eval_node(self.root(), lookup)
    }

    pub fn eval(&self, env: &EvalEnv) -> Result<f64, EvalError> {
        self.eval_with(&|v| env.get(v))
    }

    /// Value and exact directional derivative along `seed`.
    pub fn diff_eval(&self, env: &EvalEnv, seed: &Seed) -> Result<(f64, f64), EvalError> {
        let d = self.eval_with(&|v| env.get(v).map(|x| Dual::new(x, seed.get(v).unwrap_or(0.0))))?;
        Ok((d.re, d.eps))
    }
}
