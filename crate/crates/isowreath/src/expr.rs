//! Arithmetic expression language in the variables `u`, `v` and named
//! parameters, evaluated together with all partial derivatives via the jet
//! types from [`crate::jet`].
//!
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          // right-associative
//! atom   := number | 'u' | 'v' | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! `-u^2` parses as `-(u^2)`. Recognized functions: sin, cos, tan, sinh,
//! cosh, tanh, exp, log, sqrt, abs. Any other identifier is a named
//! parameter that must be bound at evaluation time.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::jet::{Jet2, Jet3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of an expression. Immutable after parsing; safe to
/// evaluate concurrently from any number of threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    VarU,
    VarV,
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message} (expected one of: {expected})")]
    Syntax {
        offset: usize,
        message: String,
        expected: String,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("parameter `{0}` is not bound in the evaluation environment")]
    UnboundParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("nondifferentiable point: {0}")]
    NonDifferentiable(String),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number `{x}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let val: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("invalid number literal `{text}`"),
                    expected: "number".into(),
                })?;
                toks.push((Tok::Num(val), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", &src[i..i + 1]),
                    expected: "number, identifier, operator, or parenthesis".into(),
                })
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser (recursive descent)
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, o)| o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        let message = match self.peek() {
            Some(t) => format!("unexpected {}", t.describe()),
            None => "unexpected end of input".into(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message,
            expected: expected.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exp = self.unary()?; // right-associative
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Some(Tok::RParen)) {
            self.bump();
            Ok(())
        } else {
            Err(self.err("`)`"))
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(x)) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { offset, name })?;
                    self.bump(); // (
                    let arg = self.expr()?;
                    self.close_paren()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "u" {
                    Ok(Expr::VarU)
                } else if name == "v" {
                    Ok(Expr::VarV)
                } else {
                    Ok(Expr::Param(name))
                }
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            _ => Err(self.err("number, variable, function call, or `(`")),
        }
    }
}

/// Parse an expression source string into its AST.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty input".into(),
            expected: "expression".into(),
        });
    }
    let toks = lex(source)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: source.len(),
    };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("end of input or binary operator"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printing (round-trips to a structurally identical tree)
// ---------------------------------------------------------------------------

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "(")?;
                e.fmt(f)?;
                write!(f, ")")
            } else {
                e.fmt(f)
            }
        }
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::VarU => write!(f, "u"),
            Expr::VarV => write!(f, "v"),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(x) => {
                write!(f, "-")?;
                child(f, x, prec(x) < 3)
            }
            Expr::Bin(op, l, r) => {
                let (sym, lvl) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    // right-associative: parenthesize left at same level
                    child(f, l, prec(l) <= 4)?;
                    write!(f, "{sym}")?;
                    child(f, r, prec(r) < 4)
                } else {
                    child(f, l, prec(l) < lvl)?;
                    write!(f, "{sym}")?;
                    child(f, r, prec(r) <= lvl)
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Jet-like number: the common surface of [`Jet2`] and [`Jet3`] that the
/// generic evaluator needs.
pub trait JetNum:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn var_u(u: f64) -> Self;
    fn var_v(v: f64) -> Self;
    fn value(&self) -> f64;
    fn is_const(&self) -> bool;
    fn powi(self, n: i64) -> Self;
    /// Chain rule through a univariate function with derivatives `d[0..=3]`
    /// at the jet's value (second-order jets ignore `d[3]`).
    fn compose(self, d: [f64; 4]) -> Self;
}

impl JetNum for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }
    fn var_u(u: f64) -> Self {
        Jet2::var_u(u)
    }
    fn var_v(v: f64) -> Self {
        Jet2::var_v(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_const(&self) -> bool {
        Jet2::is_const(self)
    }
    fn powi(self, n: i64) -> Self {
        Jet2::powi(self, n)
    }
    fn compose(self, d: [f64; 4]) -> Self {
        Jet2::compose(self, d[0], d[1], d[2])
    }
}

impl JetNum for Jet3 {
    fn constant(c: f64) -> Self {
        Jet3::constant(c)
    }
    fn var_u(u: f64) -> Self {
        Jet3::var_u(u)
    }
    fn var_v(v: f64) -> Self {
        Jet3::var_v(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_const(&self) -> bool {
        Jet3::is_const(self)
    }
    fn powi(self, n: i64) -> Self {
        Jet3::powi(self, n)
    }
    fn compose(self, d: [f64; 4]) -> Self {
        Jet3::compose(self, d[0], d[1], d[2], d[3])
    }
}

fn apply_func<J: JetNum>(func: Func, a: J) -> Result<J, EvalError> {
    let x = a.value();
    let d = match func {
        Func::Sin => [x.sin(), x.cos(), -x.sin(), -x.cos()],
        Func::Cos => [x.cos(), -x.sin(), -x.cos(), x.sin()],
        Func::Tan => {
            let t = x.tan();
            if !t.is_finite() {
                return Err(EvalError::Domain(format!("tan pole at argument {x}")));
            }
            let s = 1.0 + t * t;
            [t, s, 2.0 * t * s, 2.0 * s * (1.0 + 3.0 * t * t)]
        }
        Func::Sinh => [x.sinh(), x.cosh(), x.sinh(), x.cosh()],
        Func::Cosh => [x.cosh(), x.sinh(), x.cosh(), x.sinh()],
        Func::Tanh => {
            let t = x.tanh();
            let s = 1.0 - t * t;
            [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)]
        }
        Func::Exp => {
            let e = x.exp();
            [e, e, e, e]
        }
        Func::Log => {
            if x <= 0.0 {
                return Err(EvalError::Domain(format!("log of non-positive value {x}")));
            }
            [x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)]
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain(format!("sqrt of negative value {x}")));
            }
            if x == 0.0 {
                if a.is_const() {
                    return Ok(J::constant(0.0));
                }
                return Err(EvalError::NonDifferentiable(
                    "sqrt at 0 has an unbounded derivative".into(),
                ));
            }
            let s = x.sqrt();
            [
                s,
                0.5 / s,
                -0.25 / (s * x),
                0.375 / (s * x * x),
            ]
        }
        Func::Abs => {
            if x == 0.0 {
                if a.is_const() {
                    return Ok(J::constant(0.0));
                }
                return Err(EvalError::NonDifferentiable(
                    "abs at 0 has no derivative".into(),
                ));
            }
            [x.abs(), x.signum(), 0.0, 0.0]
        }
    };
    Ok(a.compose(d))
}

fn eval_node<J: JetNum>(
    e: &Expr,
    u: f64,
    v: f64,
    params: &HashMap<String, f64>,
) -> Result<J, EvalError> {
    match e {
        Expr::Num(x) => Ok(J::constant(*x)),
        Expr::VarU => Ok(J::var_u(u)),
        Expr::VarV => Ok(J::var_v(v)),
        Expr::Param(name) => params
            .get(name)
            .map(|&c| J::constant(c))
            .ok_or_else(|| EvalError::UnboundParameter(name.clone())),
        Expr::Neg(x) => Ok(-eval_node::<J>(x, u, v, params)?),
        Expr::Bin(op, l, r) => {
            let a: J = eval_node(l, u, v, params)?;
            let b: J = eval_node(r, u, v, params)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(EvalError::Domain("division by zero".into()));
                    }
                    Ok(a / b)
                }
                BinOp::Pow => {
                    let ev = b.value();
                    let as_int = ev.round();
                    if b.is_const() && (ev - as_int).abs() < 1e-12 && as_int.abs() < 2.0e9 {
                        let n = as_int as i64;
                        if n < 0 && a.value() == 0.0 {
                            return Err(EvalError::Domain(
                                "zero base with negative exponent".into(),
                            ));
                        }
                        Ok(a.powi(n))
                    } else if a.value() > 0.0 {
                        // general power: a^b = exp(b * log a)
                        let la = apply_func(Func::Log, a)?;
                        apply_func(Func::Exp, b * la)
                    } else {
                        Err(EvalError::Domain(format!(
                            "non-integer exponent {ev} requires a positive base (got {})",
                            a.value()
                        )))
                    }
                }
            }
        }
        Expr::Call(func, a) => apply_func(*func, eval_node::<J>(a, u, v, params)?),
    }
}

/// Evaluate the expression and all partial derivatives up to second order.
pub fn eval_jet2(
    e: &Expr,
    u: f64,
    v: f64,
    params: &HashMap<String, f64>,
) -> Result<Jet2, EvalError> {
    eval_node(e, u, v, params)
}

/// Evaluate the expression and all partial derivatives up to third order.
pub fn eval_jet3(
    e: &Expr,
    u: f64,
    v: f64,
    params: &HashMap<String, f64>,
) -> Result<Jet3, EvalError> {
    eval_node(e, u, v, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(src: &str) -> Expr {
        parse(src).unwrap()
    }

    fn no_params() -> HashMap<String, f64> {
        HashMap::new()
    }

    #[test]
    fn parse_structure() {
        assert_eq!(
            p("u^2 + v^2"),
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Bin(
                    BinOp::Pow,
                    Box::new(Expr::VarU),
                    Box::new(Expr::Num(2.0))
                )),
                Box::new(Expr::Bin(
                    BinOp::Pow,
                    Box::new(Expr::VarV),
                    Box::new(Expr::Num(2.0))
                )),
            )
        );
        assert_eq!(
            p("sin(u)*cosh(v)"),
            Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Call(Func::Sin, Box::new(Expr::VarU))),
                Box::new(Expr::Call(Func::Cosh, Box::new(Expr::VarV))),
            )
        );
    }

    #[test]
    fn truncated_input_reports_offset() {
        match parse("u +") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            parse("foo(u)"),
            Err(ParseError::UnknownFunction { name, .. }) if name == "foo"
        ));
    }

    #[test]
    fn caret_right_associative_and_neg_binding() {
        // 2^3^2 = 2^(3^2) = 512
        let e = p("2^3^2");
        let j = eval_jet2(&e, 0.0, 0.0, &no_params()).unwrap();
        assert_eq!(j.value, 512.0);
        // -u^2 = -(u^2)
        let j = eval_jet2(&p("-u^2"), 3.0, 0.0, &no_params()).unwrap();
        assert_eq!(j.value, -9.0);
    }

    #[test]
    fn display_roundtrip_samples() {
        for src in [
            "u^2 + v^2",
            "-u^2",
            "(-u)^2",
            "sin(u)*cosh(v)",
            "u - (v - 1)",
            "u / v / 2",
            "2^3^2",
            "-(u*v)",
            "a*u + b_2*v",
            "1/(u^2+v^2+1)",
        ] {
            let e = p(src);
            let printed = e.to_string();
            assert_eq!(p(&printed), e, "round trip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn eval_polynomial_jet() {
        let j = eval_jet2(&p("u^2+v^2"), 1.0, 2.0, &no_params()).unwrap();
        assert_eq!(
            (j.value, j.du, j.dv, j.duu, j.duv, j.dvv),
            (5.0, 2.0, 4.0, 2.0, 0.0, 2.0)
        );
    }

    #[test]
    fn eval_sin_cosh_jet_at_origin() {
        let j = eval_jet2(&p("sin(u)*cosh(v)"), 0.0, 0.0, &no_params()).unwrap();
        assert_relative_eq!(j.value, 0.0);
        assert_relative_eq!(j.du, 1.0);
        assert_relative_eq!(j.dv, 0.0);
        assert_relative_eq!(j.duu, 0.0);
        assert_relative_eq!(j.duv, 0.0);
        assert_relative_eq!(j.dvv, 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            eval_jet2(&p("log(u)"), 0.0, 1.0, &no_params()),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            eval_jet2(&p("1/u"), 0.0, 0.0, &no_params()),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            eval_jet2(&p("abs(u)"), 0.0, 0.0, &no_params()),
            Err(EvalError::NonDifferentiable(_))
        ));
        assert!(matches!(
            eval_jet2(&p("sqrt(u)"), 0.0, 0.0, &no_params()),
            Err(EvalError::NonDifferentiable(_))
        ));
    }

    #[test]
    fn unbound_parameter() {
        assert!(matches!(
            eval_jet2(&p("a*u"), 1.0, 1.0, &no_params()),
            Err(EvalError::UnboundParameter(name)) if name == "a"
        ));
        let mut params = HashMap::new();
        params.insert("a".to_string(), 3.0);
        let j = eval_jet2(&p("a*u"), 2.0, 0.0, &params).unwrap();
        assert_eq!((j.value, j.du), (6.0, 3.0));
    }

    #[test]
    fn product_rule_is_exact_on_polynomials() {
        // eval of a product equals the product rule applied to sub-jets,
        // bitwise for polynomial trees.
        let l = p("u^2*v + 3*v");
        let r = p("v^3 - u");
        let prod = Expr::Bin(BinOp::Mul, Box::new(l.clone()), Box::new(r.clone()));
        let (u, v) = (1.25, -0.5);
        let a = eval_jet2(&l, u, v, &no_params()).unwrap();
        let b = eval_jet2(&r, u, v, &no_params()).unwrap();
        let ab = eval_jet2(&prod, u, v, &no_params()).unwrap();
        assert_eq!(ab, a * b);
        let sum = Expr::Bin(BinOp::Add, Box::new(l), Box::new(r));
        assert_eq!(eval_jet2(&sum, u, v, &no_params()).unwrap(), a + b);
    }

    #[test]
    fn general_power_matches_exp_log() {
        let j = eval_jet2(&p("u^v"), 2.0, 1.5, &no_params()).unwrap();
        assert_relative_eq!(j.value, 2.0f64.powf(1.5), max_relative = 1e-14);
        // d/du u^v = v u^(v-1)
        assert_relative_eq!(j.du, 1.5 * 2.0f64.powf(0.5), max_relative = 1e-14);
        // negative base with non-integer exponent fails
        assert!(eval_jet2(&p("u^v"), -2.0, 1.5, &no_params()).is_err());
    }

    #[test]
    fn jet3_agrees_with_jet2_slots() {
        let e = p("sin(u*v) + exp(u)/cosh(v)");
        let (u, v) = (0.7, -0.3);
        let j2 = eval_jet2(&e, u, v, &no_params()).unwrap();
        let j3 = eval_jet3(&e, u, v, &no_params()).unwrap();
        assert_eq!(j3.truncate(), j2);
    }
}
