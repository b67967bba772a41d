use std::fmt;

use super::{BinOp, Func, Node, Scope, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    BadNumber(String),
    UnknownIdentifier(String),
    IndexOutOfRange { name: String, dim: usize },
    NotAllowed(String),
    MissingCallParen(String),
}

/// Parse failure with a 1-based column offset into the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: ", self.column)?;
        match &self.kind {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected '{t}'"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of expression"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number '{s}'"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier '{s}'"),
            ParseErrorKind::IndexOutOfRange { name, dim } => {
                write!(f, "variable '{name}' is out of range for dimension {dim}")
            }
            ParseErrorKind::NotAllowed(s) => write!(f, "variable '{s}' is not allowed here"),
            ParseErrorKind::MissingCallParen(s) => write!(f, "expected '(' after function '{s}'"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "{x}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn err(column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { column, kind }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let x: f64 = s.parse().map_err(|_| err(col, ParseErrorKind::BadNumber(s.clone())))?;
            out.push((Tok::Num(x), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => return Err(err(col, ParseErrorKind::UnexpectedChar(other))),
            };
            out.push((tok, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| err(self.end_col, ParseErrorKind::UnexpectedEnd))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // right-associative; the exponent may carry its own unary minus
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let (tok, col) = self.next()?;
        match tok {
            Tok::Num(x) => Ok(Node::Num(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(err(col, ParseErrorKind::MissingCallParen(name)));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                let var = Var::from_name(&name).ok_or_else(|| err(col, ParseErrorKind::UnknownIdentifier(name.clone())))?;
                if let Some(k) = var.index() {
                    // Var::from_name maps index 0 to usize::MAX
                    if k >= self.scope.dim {
                        return Err(err(col, ParseErrorKind::IndexOutOfRange { name, dim: self.scope.dim }));
                    }
                }
                if !self.scope.allows(var) {
                    return Err(err(col, ParseErrorKind::NotAllowed(name)));
                }
                Ok(Node::Var(var))
            }
            other => Err(err(col, ParseErrorKind::UnexpectedToken(other.to_string()))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let col = self.col();
        match self.next() {
            Ok((Tok::RParen, _)) => Ok(()),
            Ok((other, _)) => Err(err(col, ParseErrorKind::UnexpectedToken(other.to_string()))),
            Err(e) => Err(e),
        }
    }
}

pub(super) fn parse(text: &str, scope: &Scope) -> Result<Node, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(err(1, ParseErrorKind::Empty));
    }
    let mut p = Parser { toks, pos: 0, end_col: text.chars().count() + 1, scope };
    let node = p.expr()?;
    if let Some((tok, col)) = p.toks.get(p.pos) {
        return Err(err(*col, ParseErrorKind::UnexpectedToken(tok.to_string())));
    }
    Ok(node)
}
