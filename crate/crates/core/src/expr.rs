//! Arithmetic expressions in one variable `x`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 'x' | 'pi' | ident '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. Implicit multiplication is not accepted.

use std::fmt;

use thiserror::Error;

use crate::special;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("domain error in `{text}` (bytes {start}..{end}): {message}")]
    Domain {
        start: usize,
        end: usize,
        text: String,
        message: String,
    },
}

/// Built-in functions callable from expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Atan,
    Erf,
    Erfi,
    Ei,
    Abs,
}

impl Func {
    const ALL: [Func; 11] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sqrt,
        Func::Atan,
        Func::Erf,
        Func::Erfi,
        Func::Ei,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
            Func::Erf => "erf",
            Func::Erfi => "erfi",
            Func::Ei => "ei",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Expression tree; every node remembers the byte span of the source it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub span: (usize, usize),
}

impl Expr {
    fn new(node: Node, span: (usize, usize)) -> Self {
        Expr { node, span }
    }

    pub fn constant(v: f64) -> Self {
        Expr::new(Node::Const(v), (0, 0))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }
}

/// Parses an expression.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src, bytes: src.as_bytes(), pos: 0, depth: 0 };
    p.skip_ws();
    if p.pos >= p.bytes.len() {
        return Err(ExprError::Syntax { offset: p.pos, message: "empty expression".into() });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.error("expected operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        self.skip_ws();
        let start = self.pos;
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), (start, self.pos));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), (start, self.pos));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        self.skip_ws();
        let start = self.pos;
        let base = self.base()?;
        let out = if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            Expr::new(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)), (start, self.pos))
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        let start = self.pos;
        match c {
            b'-' => {
                self.pos += 1;
                let inner = self.factor()?;
                Ok(Expr::new(Node::Neg(Box::new(inner)), (start, self.pos)))
            }
            b'(' => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(Expr { node: inner.node, span: (start, self.pos) })
            }
            b'0'..=b'9' | b'.' => self.number(),
            c if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.error("expected number, `x`, function call, or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < b.len() && b[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < b.len() && b[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.error("malformed number"));
        }
        if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
            let mut q = p + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            } else {
                self.pos = q;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = &self.src[start..p];
        let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = p;
        Ok(Expr::new(Node::Const(v), (start, p)))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "x" => return Ok(Expr::new(Node::Var, (start, self.pos))),
            "pi" => return Ok(Expr::new(Node::Const(std::f64::consts::PI), (start, self.pos))),
            _ => {}
        }
        if self.peek() != Some(b'(') {
            return Err(ExprError::Syntax {
                offset: start,
                message: format!("unknown identifier `{name}`"),
            });
        }
        let func = Func::from_name(name)
            .ok_or_else(|| ExprError::UnknownFunction { name: name.to_string(), offset: start })?;
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.error("expected `)`"));
        }
        self.pos += 1;
        Ok(Expr::new(Node::Call(func, Box::new(arg)), (start, self.pos)))
    }
}

impl Expr {
    /// Evaluates at `x`. `source` is only used to quote the failing sub-expression.
    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        self.eval_in(x, None)
    }

    /// Like [`Expr::eval`], quoting `source` in domain errors.
    pub fn eval_with_source(&self, x: f64, source: &str) -> Result<f64, ExprError> {
        self.eval_in(x, Some(source))
    }

    fn domain(&self, source: Option<&str>, message: &str) -> ExprError {
        let (start, end) = self.span;
        let text = source
            .and_then(|s| s.get(start..end))
            .map(str::to_string)
            .unwrap_or_else(|| self.to_string());
        ExprError::Domain { start, end, text, message: message.to_string() }
    }

    fn eval_in(&self, x: f64, src: Option<&str>) -> Result<f64, ExprError> {
        Ok(match &self.node {
            Node::Const(v) => *v,
            Node::Var => x,
            Node::Neg(e) => -e.eval_in(x, src)?,
            Node::Binary(op, l, r) => {
                let a = l.eval_in(x, src)?;
                let b = r.eval_in(x, src)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain(src, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() && !a.is_nan() && !b.is_nan() {
                            return Err(self.domain(src, "power of a negative base"));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(self.domain(src, "negative power of zero"));
                        }
                        v
                    }
                }
            }
            Node::Call(f, arg) => {
                let u = arg.eval_in(x, src)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Ln => {
                        if !(u > 0.0) {
                            return Err(self.domain(src, "logarithm of a non-positive number"));
                        }
                        u.ln()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => u.tan(),
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(self.domain(src, "square root of a negative number"));
                        }
                        u.sqrt()
                    }
                    Func::Atan => u.atan(),
                    Func::Erf => special::erf(u),
                    Func::Erfi => special::erfi(u),
                    Func::Ei => {
                        special::expint_ei(u).map_err(|_| self.domain(src, "Ei has a pole at 0"))?
                    }
                    Func::Abs => u.abs(),
                }
            }
        })
    }

    /// Symbolic derivative with respect to `x`.
    pub fn derivative(&self) -> Expr {
        let span = self.span;
        let k = Expr::constant;
        match &self.node {
            Node::Const(_) => k(0.0),
            Node::Var => k(1.0),
            Node::Neg(e) => neg(e.derivative()),
            Node::Binary(op, l, r) => {
                let (l, r) = (l.as_ref().clone(), r.as_ref().clone());
                match op {
                    BinOp::Add => add(l.derivative(), r.derivative()),
                    BinOp::Sub => sub(l.derivative(), r.derivative()),
                    BinOp::Mul => add(mul(l.derivative(), r.clone()), mul(l, r.derivative())),
                    BinOp::Div => {
                        let num = sub(mul(l.derivative(), r.clone()), mul(l, r.derivative()));
                        div(num, pow(r, k(2.0)))
                    }
                    BinOp::Pow => match (l.as_const(), r.as_const()) {
                        (_, Some(c)) => mul(mul(k(c), pow(l.clone(), k(c - 1.0))), l.derivative()),
                        (Some(a), None) => {
                            mul(mul(self.clone(), k(a.ln())), r.derivative())
                        }
                        (None, None) => {
                            // d(u^v) = u^v (v' ln u + v u' / u)
                            let t1 = mul(r.derivative(), call(Func::Ln, l.clone()));
                            let t2 = div(mul(r, l.derivative()), l);
                            mul(self.clone(), add(t1, t2))
                        }
                    },
                }
            }
            Node::Call(f, arg) => {
                let u = arg.as_ref().clone();
                let du = u.derivative();
                let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => div(k(1.0), u),
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => div(k(1.0), pow(call(Func::Cos, u), k(2.0))),
                    Func::Sqrt => div(k(0.5), self.clone()),
                    Func::Atan => div(k(1.0), add(k(1.0), pow(u, k(2.0)))),
                    Func::Erf => mul(k(two_over_sqrt_pi), call(Func::Exp, neg(pow(u, k(2.0))))),
                    Func::Erfi => mul(k(two_over_sqrt_pi), call(Func::Exp, pow(u, k(2.0)))),
                    Func::Ei => div(call(Func::Exp, u.clone()), u),
                    Func::Abs => div(u, self.clone()),
                };
                let mut d = mul(outer, du);
                if d.span == (0, 0) {
                    d.span = span;
                }
                d
            }
        }
    }
}

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::constant(v))
}

fn neg(e: Expr) -> Expr {
    if let Some(c) = e.as_const() {
        return Expr::constant(-c);
    }
    let span = e.span;
    Expr::new(Node::Neg(Box::new(e)), span)
}

fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    let span = (l.span.0.min(r.span.0), l.span.1.max(r.span.1));
    Expr::new(Node::Binary(op, Box::new(l), Box::new(r)), span)
}

fn add(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) => folded(a + b).unwrap_or_else(|| binary(BinOp::Add, l, r)),
        (Some(a), None) if a == 0.0 => r,
        (None, Some(b)) if b == 0.0 => l,
        _ => binary(BinOp::Add, l, r),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) => folded(a - b).unwrap_or_else(|| binary(BinOp::Sub, l, r)),
        (Some(a), None) if a == 0.0 => neg(r),
        (None, Some(b)) if b == 0.0 => l,
        _ => binary(BinOp::Sub, l, r),
    }
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) => folded(a * b).unwrap_or_else(|| binary(BinOp::Mul, l, r)),
        (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::constant(0.0),
        (Some(a), None) if a == 1.0 => r,
        (None, Some(b)) if b == 1.0 => l,
        _ => binary(BinOp::Mul, l, r),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) if b != 0.0 => folded(a / b).unwrap_or_else(|| binary(BinOp::Div, l, r)),
        (Some(a), _) if a == 0.0 => Expr::constant(0.0),
        (None, Some(b)) if b == 1.0 => l,
        _ => binary(BinOp::Div, l, r),
    }
}

fn pow(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) if a > 0.0 => folded(a.powf(b)).unwrap_or_else(|| binary(BinOp::Pow, l, r)),
        (_, Some(b)) if b == 1.0 => l,
        (_, Some(b)) if b == 0.0 => Expr::constant(1.0),
        _ => binary(BinOp::Pow, l, r),
    }
}

fn call(f: Func, arg: Expr) -> Expr {
    let span = arg.span;
    Expr::new(Node::Call(f, Box::new(arg)), span)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            Node::Const(_) | Node::Var | Node::Call(..) => 5,
            Node::Neg(_) => 3,
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Binary(BinOp::Pow, ..) => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match &self.node {
            Node::Const(v) => write!(f, "{v}"),
            Node::Var => write!(f, "x"),
            Node::Neg(e) => {
                write!(f, "-")?;
                e.write_at(f, 3)
            }
            Node::Binary(op, l, r) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                l.write_at(f, lp)?;
                write!(f, "{sym}")?;
                r.write_at(f, rp)
            }
            Node::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
