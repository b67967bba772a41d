//! Formulas for Lagrangians, symmetry generators and transformation families.
//!
//! Expressions are parsed once into an AST and evaluated either in plain
//! `f64` or in (possibly nested) dual numbers, which gives exact directional
//! derivatives. The grammar is documented in `docs/expression-grammar.md`.
//!
//! Variables: `t`, `eps`, `q1..qn` (state), `qs1..qsn` (state at the forward
//! jump) and `qd1..qdn` (delta derivative of the state). Which ones an
//! expression may use depends on its [`Scope`].

mod dual;
mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use dual::{Dual, Real};
pub use eval::{EvalEnv, EvalError, EvalErrorKind, Seed};
pub use parse::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    Eps,
    /// `q<k>`, stored zero-based.
    Q(usize),
    /// `qs<k>`, stored zero-based.
    Qs(usize),
    /// `qd<k>`, stored zero-based.
    Qd(usize),
}

impl Var {
    /// Parses a variable name without checking it against any dimension.
    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "t" => return Some(Var::T),
            "eps" => return Some(Var::Eps),
            _ => {}
        }
        let (ctor, digits): (fn(usize) -> Var, &str) = if let Some(d) = name.strip_prefix("qs") {
            (Var::Qs, d)
        } else if let Some(d) = name.strip_prefix("qd") {
            (Var::Qd, d)
        } else {
            (Var::Q as fn(usize) -> Var, name.strip_prefix('q')?)
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let k: usize = digits.parse().ok()?;
        // zero index is representable only as an error later on
        Some(ctor(k.wrapping_sub(1)))
    }

    pub fn index(&self) -> Option<usize> {
        match *self {
            Var::Q(k) | Var::Qs(k) | Var::Qd(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::Eps => write!(f, "eps"),
            Var::Q(k) => write!(f, "q{}", k + 1),
            Var::Qs(k) => write!(f, "qs{}", k + 1),
            Var::Qd(k) => write!(f, "qd{}", k + 1),
        }
    }
}

/// Which variables an expression may reference, and the state dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub dim: usize,
    pub time: bool,
    pub eps: bool,
    pub state: bool,
    pub shifted: bool,
}

impl Scope {
    /// `L(t, qs, qd)`.
    pub fn lagrangian(dim: usize) -> Self {
        Self { dim, time: true, eps: false, state: false, shifted: true }
    }

    /// Generators `τ(t, q)` and `ξ(t, q)`.
    pub fn generator(dim: usize) -> Self {
        Self { dim, time: true, eps: false, state: true, shifted: false }
    }

    /// Finite transformation families `T_ε(t, q)`, `Q_ε(t, q)`.
    pub fn family(dim: usize) -> Self {
        Self { dim, time: true, eps: true, state: true, shifted: false }
    }

    pub fn any(dim: usize) -> Self {
        Self { dim, time: true, eps: true, state: true, shifted: true }
    }

    fn allows(&self, v: Var) -> bool {
        match v {
            Var::T => self.time,
            Var::Eps => self.eps,
            Var::Q(_) => self.state,
            Var::Qs(_) | Var::Qd(_) => self.shifted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(x) => write!(f, "{x:?}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed formula.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    scope: Scope,
}

impl Expr {
    pub fn parse(text: &str, scope: Scope) -> Result<Self, ParseError> {
        let root = parse::parse(text, &scope)?;
        Ok(Self { root, scope })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    /// Free variables of the expression.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.root.collect_vars(&mut out);
        out
    }

    /// True if the expression is the literal constant `0`.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.root, Node::Num(x) if x == 0.0)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized rendering that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
